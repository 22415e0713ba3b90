"""Synthetic commit/smell corpora with known causal structure.

Four smell kinds cover the scenarios the battery has to tell apart:

* ``CAUSAL`` raises the per-commit bug-fix probability of files carrying it.
* ``CONFOUND_LEN`` is present exactly on long files; length itself raises the
  bug rate, so the smell looks predictive without being causal.
* ``DEVSTYLE`` marks every file owned by authors who adopt a style; those
  authors have a higher bug rate, but the smell adds nothing within an author.
* ``RANDOM`` is an independent Bernoulli marker.
"""

from __future__ import annotations

import calendar
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from statistics import NormalDist
from xml.sax.saxutils import quoteattr

import numpy as np

from smellcause.ingest import CommitRecord, FileKey, SmellSnapshot, dump_commits

CAUSAL = "CAUSAL"
CONFOUND_LEN = "CONFOUND_LEN"
DEVSTYLE = "DEVSTYLE"
RANDOM = "RANDOM"
KINDS = (CAUSAL, CONFOUND_LEN, DEVSTYLE, RANDOM)

CORRECTIVE_MESSAGES = (
    "Fix null pointer in {c}",
    "Fix crash when loading {c}",
    "Bug fix: wrong index in {c}",
    "Fixed race condition in {c}",
    "Repair broken {c} handling",
    "Hotfix for {c} regression",
)
NEUTRAL_MESSAGES = (
    "Add {c} option",
    "Refactor {c}",
    "Update {c} documentation",
    "Rename variables in {c}",
    "Improve {c} performance",
    "Clean up {c}",
    "Merge branch 'feature/{c}'",
)

LINES_MU = math.log(200.0)
LINES_SIGMA = 0.8
WORK_START = 9 * 3600
WORK_SPAN = 9 * 3600
AUX_FILES = 40


class SynthSpecError(ValueError):
    pass


@dataclass(frozen=True)
class SmellSpec:
    name: str
    kind: str
    prevalence: float = 0.3
    effect_delta: float = 0.0
    persistence: float = 0.85
    group: str = "Synthetic"


def default_smells() -> tuple[SmellSpec, ...]:
    return (
        SmellSpec("CausalSmell", CAUSAL, prevalence=0.3, effect_delta=0.15),
        SmellSpec("LengthProxy", CONFOUND_LEN, prevalence=0.25),
        SmellSpec("AuthorStyle", DEVSTYLE, prevalence=0.4, effect_delta=0.1),
        SmellSpec("RandomNoise", RANDOM, prevalence=0.3),
    )


@dataclass(frozen=True)
class CorpusSpec:
    n_repos: int = 20
    files_per_repo: int = 100
    years: tuple[int, ...] = (2017, 2018, 2019)
    authors_per_repo: int = 5
    commits_per_file: float = 14.0
    eligible_fraction: float = 0.9
    min_commits: int = 10
    base_bug_rate: float = 0.1
    length_effect: float = 0.08
    owner_share: float = 0.85
    coupling_mean: float = 1.5
    deletion_rate: float = 0.01
    test_fraction: float = 0.0
    smell_specs: tuple[SmellSpec, ...] = field(default_factory=default_smells)
    seed: int = 0

    def validate(self) -> None:
        for name in ("eligible_fraction", "base_bug_rate", "owner_share", "deletion_rate", "test_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise SynthSpecError(f"{name}={v} is not a probability")
        if self.n_repos < 1 or self.files_per_repo < 1 or self.authors_per_repo < 1:
            raise SynthSpecError("n_repos, files_per_repo and authors_per_repo must be positive")
        if not self.years:
            raise SynthSpecError("years must be non-empty")
        if list(self.years) != list(range(self.years[0], self.years[0] + len(self.years))):
            raise SynthSpecError(f"years must be consecutive, got {self.years}")
        if self.commits_per_file <= 0 or self.min_commits < 1:
            raise SynthSpecError("commits_per_file and min_commits must be positive")
        names = [s.name for s in self.smell_specs]
        if len(set(names)) != len(names):
            raise SynthSpecError("smell names must be unique")
        for s in self.smell_specs:
            if s.kind not in KINDS:
                raise SynthSpecError(f"{s.name}: unknown kind {s.kind!r}")
            if not 0.0 < s.prevalence < 1.0:
                raise SynthSpecError(f"{s.name}: prevalence must be in (0, 1), got {s.prevalence}")
            if not 0.0 <= s.persistence <= 1.0:
                raise SynthSpecError(f"{s.name}: persistence must be in [0, 1]")
            if s.effect_delta < 0:
                raise SynthSpecError(f"{s.name}: effect_delta must be non-negative")


@dataclass
class SyntheticCorpus:
    spec: CorpusSpec
    commits: list[CommitRecord]
    snapshots: dict[int, SmellSnapshot]
    ground_truth: dict


def expected_verdicts(spec: CorpusSpec) -> dict[str, str]:
    """Verdict each smell should receive for the CCP metric.

    A CAUSAL smell with zero effect is indistinguishable from RANDOM and is
    expected to be rejected like one.
    """
    out = {}
    for s in spec.smell_specs:
        out[s.name] = "Potential" if s.kind == CAUSAL and s.effect_delta > 0 else "Rejected"
    return out


def expected_failures(spec: CorpusSpec) -> dict[str, str | None]:
    """The property each non-causal smell is built to fail."""
    out: dict[str, str | None] = {}
    for s in spec.smell_specs:
        if s.kind == CAUSAL and s.effect_delta > 0:
            out[s.name] = None
        elif s.kind == CONFOUND_LEN:
            out[s.name] = "length"
        elif s.kind == DEVSTYLE:
            out[s.name] = "twins"
        else:
            out[s.name] = "any"
    return out


def _sha(*parts) -> str:
    return hashlib.sha1(":".join(map(str, parts)).encode()).hexdigest()


def _year_start(year: int) -> int:
    return int(datetime(year, 1, 1, tzinfo=timezone.utc).timestamp())


def _new_count(rng: np.random.Generator) -> int:
    return 1 + int(rng.poisson(0.7))


def _step_count(rng: np.random.Generator, count: int, s: SmellSpec) -> int:
    """Advance a CAUSAL/RANDOM smell count by one year."""
    if count > 0:
        if rng.random() >= s.persistence:
            return 0
        if rng.random() < 0.15:
            return max(1, count + int(rng.choice((-1, 1))))
        return count
    intro = s.prevalence * (1 - s.persistence) / (1 - s.prevalence)
    return _new_count(rng) if rng.random() < min(1.0, intro) else 0


class _File:
    __slots__ = ("key", "owner", "eligible", "log_lines", "counts", "alive")

    def __init__(self, key, owner, eligible, log_lines):
        self.key = key
        self.owner = owner
        self.eligible = eligible
        self.log_lines = log_lines
        self.counts: dict[str, int] = {}
        self.alive = True

    @property
    def lines(self) -> int:
        return max(5, int(round(math.exp(self.log_lines))))


def _generate_repo(spec: CorpusSpec, r: int, len_thresholds: dict[str, float]):
    rng = np.random.default_rng([spec.seed, r])
    repo = f"repo{r:03d}"
    authors = [f"{repo}-dev{j}" for j in range(spec.authors_per_repo)]
    style = {
        s.name: rng.random(len(authors)) < s.prevalence
        for s in spec.smell_specs if s.kind == DEVSTYLE
    }
    files = []
    for i in range(spec.files_per_repo):
        if rng.random() < spec.test_fraction:
            path = f"src/test/java/{repo}/Module{i:03d}Test.java"
        else:
            path = f"src/main/java/{repo}/Module{i:03d}.java"
        f = _File(
            FileKey(repo, path),
            int(rng.integers(len(authors))),
            bool(rng.random() < spec.eligible_fraction),
            float(rng.normal(LINES_MU, LINES_SIGMA)),
        )
        files.append(f)

    commits: list[CommitRecord] = []
    snapshots: dict[int, dict[FileKey, tuple[int, dict[str, int]]]] = {}
    norm = NormalDist()
    for yi, year in enumerate(spec.years):
        # advance code state to January 1st of this year
        for f in files:
            if not f.alive:
                continue
            if yi > 0:
                if rng.random() < spec.deletion_rate:
                    f.alive = False
                    continue
                f.log_lines += float(rng.normal(0.02, 0.05))
            for s in spec.smell_specs:
                if s.kind in (CAUSAL, RANDOM):
                    if yi == 0:
                        f.counts[s.name] = _new_count(rng) if rng.random() < s.prevalence else 0
                    else:
                        f.counts[s.name] = _step_count(rng, f.counts[s.name], s)
                elif s.kind == CONFOUND_LEN:
                    f.counts[s.name] = 1 if f.log_lines >= len_thresholds[s.name] else 0
                elif s.kind == DEVSTYLE:
                    if yi == 0:
                        f.counts[s.name] = _new_count(rng) if style[s.name][f.owner] else 0
        snapshots[year] = {
            f.key: (f.lines, {k: v for k, v in f.counts.items() if v > 0}) for f in files if f.alive
        }

        start = _year_start(year)
        days = 366 if calendar.isleap(year) else 365
        for i, f in enumerate(files):
            if not f.alive:
                continue
            rate = spec.base_bug_rate
            u = norm.cdf((f.log_lines - LINES_MU) / LINES_SIGMA)
            rate += spec.length_effect * (u - 0.5)
            for s in spec.smell_specs:
                if s.kind == CAUSAL and f.counts.get(s.name, 0) > 0:
                    rate += s.effect_delta
                elif s.kind == DEVSTYLE and style[s.name][f.owner]:
                    rate += s.effect_delta
            rate = min(0.95, max(0.005, rate))
            k = int(rng.poisson(spec.commits_per_file))
            k = max(k, spec.min_commits) if f.eligible else min(int(rng.poisson(4.0)), spec.min_commits - 1)
            if k == 0:
                continue
            by_owner = rng.random(k) < spec.owner_share
            others = rng.integers(len(authors), size=k)
            day = rng.integers(days, size=k)
            sec = WORK_START + rng.integers(WORK_SPAN, size=k)
            fixes = rng.random(k) < rate
            n_extra = rng.poisson(spec.coupling_mean, size=k)
            tmpl = rng.integers(1 << 16, size=k)
            for n in range(k):
                author = authors[f.owner] if by_owner[n] else authors[int(others[n])]
                extra = rng.choice(AUX_FILES, size=min(int(n_extra[n]), AUX_FILES), replace=False)
                paths = [f.key.file_path] + [f"resources/{repo}/conf{j:02d}.properties" for j in sorted(extra)]
                pool = CORRECTIVE_MESSAGES if fixes[n] else NEUTRAL_MESSAGES
                msg = pool[int(tmpl[n]) % len(pool)].format(c=f"Module{i:03d}")
                commits.append(CommitRecord(
                    repo_id=repo,
                    commit_id=_sha(spec.seed, repo, i, year, n),
                    author_id=author,
                    timestamp=start + int(day[n]) * 86400 + int(sec[n]),
                    message=msg,
                    files=tuple(paths),
                ))
    return commits, snapshots


def generate(spec: CorpusSpec) -> SyntheticCorpus:
    """Generate a corpus; identical specs (including seed) give identical output."""
    spec.validate()
    len_thresholds = {
        s.name: LINES_MU + LINES_SIGMA * NormalDist().inv_cdf(1 - s.prevalence)
        for s in spec.smell_specs if s.kind == CONFOUND_LEN
    }
    groups = {s.name: s.group for s in spec.smell_specs}
    snapshots = {y: SmellSnapshot("*", y, smell_groups=dict(groups)) for y in spec.years}
    commits: list[CommitRecord] = []
    for r in range(spec.n_repos):
        repo_commits, repo_snaps = _generate_repo(spec, r, len_thresholds)
        commits.extend(repo_commits)
        for year, files in repo_snaps.items():
            snap = snapshots[year]
            for key, (lines, counts) in files.items():
                snap.line_counts[key] = lines
                snap.entries[key] = counts
    commits.sort(key=CommitRecord.sort_key)
    truth = {
        "seed": spec.seed,
        "smells": {
            s.name: {
                "kind": s.kind,
                "expected_verdict": expected_verdicts(spec)[s.name],
                "expected_failure": expected_failures(spec)[s.name],
            }
            for s in spec.smell_specs
        },
    }
    return SyntheticCorpus(spec, commits, snapshots, truth)


def spec_to_dict(spec: CorpusSpec) -> dict:
    d = asdict(spec)
    d["years"] = list(spec.years)
    return d


def spec_from_dict(d: dict) -> CorpusSpec:
    d = dict(d)
    if "smell_specs" in d:
        d["smell_specs"] = tuple(SmellSpec(**s) for s in d["smell_specs"])
    if "years" in d:
        d["years"] = tuple(d["years"])
    return CorpusSpec(**d)


def write_corpus(corpus: SyntheticCorpus, out_dir: str | Path, fmt: str = "generic-csv") -> Path:
    """Write the corpus in the formats the analyzer reads, plus
    ``ground_truth.json`` and a ready-to-use ``config.toml``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "commits.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        dump_commits(corpus.commits, fh)
    ext = "xml" if fmt == "checkstyle-xml" else "csv"
    for year, snap in corpus.snapshots.items():
        keys = sorted(snap.line_counts)
        with open(out / f"lines_{year}.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("file,lines\n")
            for k in keys:
                fh.write(f"{k},{snap.line_counts[k]}\n")
        with open(out / f"smells_{year}.{ext}", "w", encoding="utf-8", newline="\n") as fh:
            if fmt == "checkstyle-xml":
                _write_checkstyle(fh, snap, keys)
            else:
                fh.write("file,smell,count,group\n")
                for k in keys:
                    for smell, n in sorted(snap.entries.get(k, {}).items()):
                        fh.write(f"{k},{smell},{n},{snap.smell_groups.get(smell, '')}\n")
    payload = dict(corpus.ground_truth, spec=spec_to_dict(corpus.spec))
    (out / "ground_truth.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    years = ", ".join(str(y) for y in corpus.spec.years)
    (out / "config.toml").write_text(
        f'commits = "commits.jsonl"\n'
        f'smell_reports = "smells_{{year}}.{ext}"\n'
        f'smell_format = "{fmt}"\n'
        f'line_counts = "lines_{{year}}.csv"\n'
        f"years = [{years}]\n"
        f"seed = {corpus.spec.seed}\n"
    )
    return out


def _write_checkstyle(fh, snap: SmellSnapshot, keys) -> None:
    fh.write('<?xml version="1.0" encoding="UTF-8"?>\n<checkstyle version="10.0">\n')
    for k in keys:
        fh.write(f"  <file name={quoteattr(str(k))}>\n")
        for smell, n in sorted(snap.entries.get(k, {}).items()):
            src = f"synthetic.checks.{snap.smell_groups.get(smell, 'misc').lower()}.{smell}Check"
            for _ in range(n):
                fh.write(f'    <error line="1" severity="warning" source={quoteattr(src)}/>\n')
        fh.write("  </file>\n")
    fh.write("</checkstyle>\n")
