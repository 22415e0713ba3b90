from __future__ import annotations

import itertools
import time
from datetime import datetime, timezone
from pathlib import Path

import pytest

from smellcause.ingest import CommitRecord, FileKey, SmellSnapshot
from smellcause.pipeline import analyze_corpus, make_config
from smellcause.synth import CorpusSpec, generate

FIXTURES = Path(__file__).parent / "fixtures"
SWEEP_SEEDS = tuple(range(20))
SWEEP_MIN_FILES = 20

_sha_counter = itertools.count()


def ts(year, month=1, day=1, hour=12, minute=0) -> int:
    return int(datetime(year, month, day, hour, minute, tzinfo=timezone.utc).timestamp())


def commit(repo="r", files=("A.java",), when=None, author="alice", msg="update",
           corrective=False, sha=None) -> CommitRecord:
    return CommitRecord(
        repo_id=repo,
        commit_id=sha or f"c{next(_sha_counter):06d}",
        author_id=author,
        timestamp=when if when is not None else ts(2019),
        message=msg,
        files=tuple(files),
        is_corrective=corrective,
    )


def snapshot(year, counts, lines=None, repo="r") -> SmellSnapshot:
    """Build a snapshot from ``{path: {smell: n}}``; every file gets 100 lines
    unless ``lines`` says otherwise."""
    snap = SmellSnapshot(repo, year)
    for path, smells in counts.items():
        key = FileKey(repo, path)
        snap.entries[key] = {s: n for s, n in smells.items() if n > 0}
        snap.line_counts[key] = (lines or {}).get(path, 100)
    return snap


def sweep_config(**kw):
    values = {"min_files": SWEEP_MIN_FILES}
    values.update(kw)
    return make_config(values)


class Sweep:
    """Analyses of the default synthetic corpus for every sweep seed, run once
    per session and shared by the recovery and negative-control checks."""

    def __init__(self):
        self.specs = {}
        self.analyses = {}
        self.seconds = {}
        for seed in SWEEP_SEEDS:
            start = time.perf_counter()
            spec = CorpusSpec(seed=seed)
            corpus = generate(spec)
            self.specs[seed] = spec
            self.analyses[seed] = analyze_corpus(corpus.commits, corpus.snapshots, sweep_config(seed=seed))
            self.seconds[seed] = time.perf_counter() - start


@pytest.fixture(scope="session")
def sweep() -> Sweep:
    return Sweep()


_ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = {}


@pytest.fixture
def acceptance(request):
    """``acceptance(number, title, ok, detail)`` records one part of a
    criterion; a criterion passes only if all its parts do."""
    store = request.config.stash[_ACCEPTANCE]

    def record(number: int, title: str, ok: bool, detail: str = "") -> None:
        entry = store.setdefault(number, {"title": title, "parts": []})
        entry["parts"].append((bool(ok), detail))
        print(f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_ACCEPTANCE, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        entry = store[number]
        ok = all(part_ok for part_ok, _ in entry["parts"])
        details = "; ".join(d for _, d in entry["parts"] if d)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {number}. {entry['title']} ({details})")
