from __future__ import annotations

import json
import math
from collections import defaultdict

import pytest

from smellcause.classify import classify_commit
from smellcause.ingest import CHECKSTYLE_XML, GENERIC_CSV, FileKey
from smellcause.metrics import CommitIndex
from smellcause.pipeline import load_config, load_inputs
from smellcause.synth import (
    CAUSAL,
    CONFOUND_LEN,
    CORRECTIVE_MESSAGES,
    DEVSTYLE,
    NEUTRAL_MESSAGES,
    RANDOM,
    CorpusSpec,
    SmellSpec,
    SynthSpecError,
    expected_failures,
    expected_verdicts,
    generate,
    spec_from_dict,
    spec_to_dict,
    write_corpus,
)
from smellcause.temporal import build_year_pairs, stability

TINY = CorpusSpec(n_repos=3, files_per_repo=20, seed=5)


def test_generation_is_deterministic():
    a, b = generate(TINY), generate(TINY)
    assert a.commits == b.commits
    assert all(a.snapshots[y].entries == b.snapshots[y].entries for y in TINY.years)
    assert a.ground_truth == b.ground_truth
    c = generate(spec_from_dict(dict(spec_to_dict(TINY), seed=6)))
    assert c.commits != a.commits


def test_spec_dict_round_trip():
    assert spec_from_dict(json.loads(json.dumps(spec_to_dict(TINY)))) == TINY


@pytest.mark.parametrize("change, fragment", [
    ({"base_bug_rate": 1.5}, "probability"),
    ({"years": (2017, 2019)}, "consecutive"),
    ({"years": ()}, "non-empty"),
    ({"n_repos": 0}, "positive"),
    ({"smell_specs": (SmellSpec("A", RANDOM), SmellSpec("A", RANDOM))}, "unique"),
    ({"smell_specs": (SmellSpec("A", "WEIRD"),)}, "unknown kind"),
    ({"smell_specs": (SmellSpec("A", RANDOM, prevalence=1.0),)}, "prevalence"),
    ({"smell_specs": (SmellSpec("A", CAUSAL, effect_delta=-0.1),)}, "non-negative"),
])
def test_spec_validation(change, fragment):
    spec = spec_from_dict(dict(spec_to_dict(TINY), **{k: v for k, v in change.items() if k != "smell_specs"}))
    if "smell_specs" in change:
        spec = CorpusSpec(n_repos=1, smell_specs=change["smell_specs"])
    with pytest.raises(SynthSpecError, match=fragment):
        generate(spec)


def test_message_templates_match_the_classifier():
    for t in CORRECTIVE_MESSAGES:
        assert classify_commit(t.format(c="Module001"))
    for t in NEUTRAL_MESSAGES:
        assert not classify_commit(t.format(c="Module001"))


def test_expected_verdicts_and_failures():
    spec = CorpusSpec(smell_specs=(
        SmellSpec("C", CAUSAL, effect_delta=0.1), SmellSpec("Z", CAUSAL, effect_delta=0.0),
        SmellSpec("L", CONFOUND_LEN), SmellSpec("D", DEVSTYLE), SmellSpec("R", RANDOM),
    ))
    assert expected_verdicts(spec) == {"C": "Potential", "Z": "Rejected", "L": "Rejected",
                                       "D": "Rejected", "R": "Rejected"}
    assert expected_failures(spec) == {"C": None, "Z": "any", "L": "length", "D": "twins", "R": "any"}


def test_eligible_fraction_and_commit_floor():
    corpus = generate(TINY)
    counts = defaultdict(lambda: defaultdict(int))
    for c in corpus.commits:
        counts[c.year][(c.repo_id, c.files[0])] += 1
    for year, per_file in counts.items():
        n = list(per_file.values())
        share = sum(k >= TINY.min_commits for k in n) / len(n)
        assert 0.75 <= share <= 1.0


def test_length_proxy_marks_long_files():
    spec = CorpusSpec(n_repos=10, files_per_repo=100, seed=2,
                      smell_specs=(SmellSpec("L", CONFOUND_LEN, prevalence=0.25),))
    snap = generate(spec).snapshots[2017]
    smelly = [snap.line_counts[k] for k in snap.files() if snap.count(k, "L")]
    clean = [snap.line_counts[k] for k in snap.files() if not snap.count(k, "L")]
    assert max(clean) <= min(smelly)
    assert 0.2 <= len(smelly) / (len(smelly) + len(clean)) <= 0.3


def test_devstyle_follows_the_owner():
    spec = CorpusSpec(n_repos=6, files_per_repo=60, seed=4,
                      smell_specs=(SmellSpec("D", DEVSTYLE, prevalence=0.5),))
    corpus = generate(spec)
    index = CommitIndex(corpus.commits)
    snap = corpus.snapshots[2017]
    status = defaultdict(set)
    for k in snap.files():
        owner = index.owner(k, 2017)
        if owner is not None and len(index.in_year(k, 2017)) >= 10:
            status[owner].add(snap.count(k, "D") > 0)
    # owners are the dominant author, so mixed cells should be rare
    mixed = sum(len(v) > 1 for v in status.values())
    assert mixed <= len(status) * 0.1


def test_ccp_converges_to_configured_rates():
    spec = CorpusSpec(n_repos=20, files_per_repo=100, seed=9, length_effect=0.0, commits_per_file=30,
                      smell_specs=(SmellSpec("C", CAUSAL, 0.3, 0.15), SmellSpec("R", RANDOM, 0.3)))
    corpus = generate(spec)
    snap = corpus.snapshots[2019]
    fix = defaultdict(int)
    tot = defaultdict(int)
    for c in corpus.commits:
        if c.year != 2019:
            continue
        group = snap.count(snap_key(c), "C") > 0
        tot[group] += 1
        fix[group] += classify_commit(c.message)
    for group, want in ((False, 0.10), (True, 0.25)):
        p = fix[group] / tot[group]
        se = math.sqrt(want * (1 - want) / tot[group])
        assert abs(p - want) < 4 * se, (group, p, want)
    # the random smell carries no signal
    fix_r = defaultdict(int)
    tot_r = defaultdict(int)
    for c in corpus.commits:
        if c.year == 2019 and not snap.count(snap_key(c), "C"):
            g = snap.count(snap_key(c), "R") > 0
            tot_r[g] += 1
            fix_r[g] += classify_commit(c.message)
    assert abs(fix_r[True] / tot_r[True] - fix_r[False] / tot_r[False]) < 0.02


def snap_key(c):
    # the generator puts the owning source file first
    return FileKey(c.repo_id, c.files[0])


def test_stability_increases_with_persistence():
    rs = []
    for persistence in (0.3, 0.7, 0.95):
        spec = CorpusSpec(n_repos=10, files_per_repo=100, seed=1,
                          smell_specs=(SmellSpec("R", RANDOM, 0.3, persistence=persistence),))
        snaps = generate(spec).snapshots
        pairs = [build_year_pairs(snaps[y], snaps[y + 1]) for y in (2017, 2018)]
        rs.append(stability("R", pairs))
    assert rs[0] < rs[1] < rs[2]


def test_prevalence_is_stationary():
    spec = CorpusSpec(n_repos=20, files_per_repo=100, seed=3,
                      smell_specs=(SmellSpec("R", RANDOM, 0.3, persistence=0.6),))
    snaps = generate(spec).snapshots
    for y, snap in snaps.items():
        share = sum(snap.count(k, "R") > 0 for k in snap.files()) / len(snap.files())
        assert abs(share - 0.3) < 0.04, (y, share)


@pytest.mark.parametrize("fmt", [GENERIC_CSV, CHECKSTYLE_XML])
def test_written_corpus_loads_back(tmp_path, fmt):
    corpus = generate(TINY)
    out = write_corpus(corpus, tmp_path / "c", fmt)
    config = load_config(out / "config.toml")
    commits, snaps, inputs = load_inputs(config)
    assert [(c.repo_id, c.commit_id, c.files) for c in commits] == \
        [(c.repo_id, c.commit_id, c.files) for c in corpus.commits]
    for y in TINY.years:
        assert snaps[y].entries == corpus.snapshots[y].entries
        assert snaps[y].line_counts == corpus.snapshots[y].line_counts
    truth = json.loads((out / "ground_truth.json").read_text())
    assert truth["smells"]["CausalSmell"]["expected_verdict"] == "Potential"
    assert truth["spec"]["seed"] == TINY.seed
