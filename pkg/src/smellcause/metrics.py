"""Per file-year target metrics and 25/50/25 quality grouping.

For every metric a lower value is better: fewer bug fixes, smaller commits,
shorter commits, faster detection. The random control follows the same
convention so it can flow through identical code.
"""

from __future__ import annotations

import hashlib
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from smellcause.ingest import CommitRecord, FileKey, SmellSnapshot

HIGH, OTHER, LOW = "high", "other", "low"
METRICS = ("ccp", "coupling", "duration", "detection", "random")
CONCEPTS = {
    "ccp": "CCP",
    "coupling": "Coupling",
    "duration": "Duration",
    "detection": "Detection",
    "random": "Random",
}
SECONDS_PER_HOUR = 3600
SECONDS_PER_DAY = 86400


class GroupingError(ValueError):
    pass


@dataclass(frozen=True)
class FileYearMetrics:
    file: FileKey
    year: int
    commit_count: int
    corrective_count: int
    ccp: float
    coupling: float
    duration_hours: float | None
    detection_days: float | None
    random_control: int
    line_count: int

    def value(self, metric: str) -> float | None:
        return {
            "ccp": self.ccp,
            "coupling": self.coupling,
            "duration": self.duration_hours,
            "detection": self.detection_days,
            "random": float(self.random_control),
        }[metric]


@dataclass(frozen=True)
class QualityGrouping:
    metric_name: str
    assignment: dict[FileKey, str]
    cut_values: tuple[float, float]

    def members(self, group: str) -> set[FileKey]:
        return {k for k, g in self.assignment.items() if g == group}

    @property
    def files(self) -> set[FileKey]:
        return set(self.assignment)


def _touches(c: CommitRecord, file: FileKey) -> bool:
    return c.repo_id == file.repo_id and file.file_path in c.files


def _file_commits(file: FileKey, year: int | None, commits: Iterable[CommitRecord]) -> list[CommitRecord]:
    out = [c for c in commits if _touches(c, file) and (year is None or c.year == year)]
    out.sort(key=CommitRecord.sort_key)
    return out


def compute_ccp(file: FileKey, year: int, commits: Iterable[CommitRecord]) -> float | None:
    """Share of the file's commits in ``year`` that are corrective."""
    mine = _file_commits(file, year, commits)
    if not mine:
        return None
    return sum(c.is_corrective for c in mine) / len(mine)


def compute_coupling(file: FileKey, year: int, commits: Iterable[CommitRecord]) -> float | None:
    mine = _file_commits(file, year, commits)
    if not mine:
        return None
    return sum(len(c.files) for c in mine) / len(mine)


def commit_durations(commits: Iterable[CommitRecord]) -> dict[tuple[str, str], float]:
    """Hours since the same author's previous commit in the repo, keyed by
    ``(repo, sha)``. Only commits whose predecessor is on the same UTC date
    get an entry."""
    by_author: dict[tuple[str, str], list[CommitRecord]] = defaultdict(list)
    for c in commits:
        by_author[(c.repo_id, c.author_id)].append(c)
    out: dict[tuple[str, str], float] = {}
    for seq in by_author.values():
        seq.sort(key=CommitRecord.sort_key)
        for prev, cur in zip(seq, seq[1:]):
            if prev.date == cur.date:
                out[(cur.repo_id, cur.commit_id)] = (cur.timestamp - prev.timestamp) / SECONDS_PER_HOUR
    return out


def compute_duration(
    file: FileKey,
    year: int,
    commits_by_author: Mapping[str, Sequence[CommitRecord]],
) -> float | None:
    """Mean same-day gross duration, in hours, of the file's commits in ``year``.

    ``commits_by_author`` maps author ids to their commits in the file's
    repository, across all years.
    """
    all_commits = [c for seq in commits_by_author.values() for c in seq if c.repo_id == file.repo_id]
    durations = commit_durations(all_commits)
    return mean_duration(_file_commits(file, year, all_commits), durations)


def mean_duration(file_commits: Iterable[CommitRecord], durations: Mapping[tuple[str, str], float]) -> float | None:
    vals = [durations[(c.repo_id, c.commit_id)] for c in file_commits if (c.repo_id, c.commit_id) in durations]
    if not vals:
        return None
    return math.fsum(vals) / len(vals)


def compute_detection(file: FileKey, year: int, commits: Iterable[CommitRecord]) -> float | None:
    """Mean days from the file's previous touch to each corrective commit in ``year``.

    The previous touch may fall in an earlier year.
    """
    return detection_from_history(_file_commits(file, None, commits), year)


def detection_from_history(history: Sequence[CommitRecord], year: int) -> float | None:
    """Same as :func:`compute_detection` for a file's sorted commit history."""
    gaps = [
        (cur.timestamp - prev.timestamp) / SECONDS_PER_DAY
        for prev, cur in zip(history, history[1:])
        if cur.is_corrective and cur.year == year
    ]
    if not gaps:
        return None
    return math.fsum(gaps) / len(gaps)


def assign_random_control(file: FileKey, seed: int, year: int | None = None) -> int:
    """Deterministic pseudo-uniform value in 1..100 for a file (and year)."""
    token = f"{seed}\x1f{year}\x1f{file.repo_id}\x1f{file.file_path}".encode()
    digest = hashlib.blake2b(token, digest_size=8).digest()
    return int.from_bytes(digest, "big") % 100 + 1


def partition_quality(
    values: Mapping[FileKey, float],
    metric_name: str = "",
    fractions: tuple[float, float, float] = (0.25, 0.50, 0.25),
) -> QualityGrouping:
    """Split files into high/other/low quality by ascending metric value.

    With the default fractions the first ``floor(n/4)`` files of the
    ``(value, repo, path)`` ordering are high quality and the last
    ``floor(n/4)`` low quality. ``cut_values`` are the values of the last
    high-quality and the first low-quality file.
    """
    if abs(sum(fractions) - 1.0) > 1e-9 or min(fractions) < 0:
        raise GroupingError(f"group fractions must be non-negative and sum to 1, got {fractions}")
    items = [(v, k) for k, v in values.items() if v is not None and not math.isnan(v)]
    n = len(items)
    if n < 4:
        raise GroupingError(f"{metric_name or 'metric'}: need at least 4 files with values, got {n}")
    items.sort(key=lambda t: (t[0], t[1].repo_id, t[1].file_path))
    n_high = int(n * fractions[0])
    n_low = int(n * fractions[2])
    if n_high < 1 or n_low < 1:
        raise GroupingError(f"{metric_name or 'metric'}: {n} files leave an empty quality group")
    assignment: dict[FileKey, str] = {}
    for i, (_, key) in enumerate(items):
        if i < n_high:
            assignment[key] = HIGH
        elif i >= n - n_low:
            assignment[key] = LOW
        else:
            assignment[key] = OTHER
    cuts = (items[n_high - 1][0], items[n - n_low][0])
    return QualityGrouping(metric_name, assignment, cuts)


class CommitIndex:
    """Per-file histories and precomputed commit durations for one corpus."""

    def __init__(self, commits: Iterable[CommitRecord]):
        self.commits = sorted(commits, key=CommitRecord.sort_key)
        self.history: dict[FileKey, list[CommitRecord]] = defaultdict(list)
        for c in self.commits:
            for path in c.files:
                self.history[FileKey(c.repo_id, path)].append(c)
        self.durations = commit_durations(self.commits)

    def in_year(self, key: FileKey, year: int) -> list[CommitRecord]:
        return [c for c in self.history.get(key, ()) if c.year == year]

    def owner(self, key: FileKey, year: int) -> str | None:
        """Author with most commits to the file in ``year``; ties go to the
        author whose first commit in the year came earliest."""
        tally: dict[str, list] = {}
        for c in self.in_year(key, year):
            entry = tally.setdefault(c.author_id, [0, c.sort_key()])
            entry[0] += 1
        if not tally:
            return None
        return min(tally, key=lambda a: (-tally[a][0], tally[a][1], a))


def compute_file_metrics(
    index: CommitIndex,
    eligible: Iterable[FileKey],
    year: int,
    snapshot: SmellSnapshot,
    seed: int = 0,
) -> dict[FileKey, FileYearMetrics]:
    out: dict[FileKey, FileYearMetrics] = {}
    for key in sorted(eligible):
        mine = index.in_year(key, year)
        n = len(mine)
        if n == 0:
            continue
        corrective = sum(c.is_corrective for c in mine)
        out[key] = FileYearMetrics(
            file=key,
            year=year,
            commit_count=n,
            corrective_count=corrective,
            ccp=corrective / n,
            coupling=sum(len(c.files) for c in mine) / n,
            duration_hours=mean_duration(mine, index.durations),
            detection_days=detection_from_history(index.history[key], year),
            random_control=assign_random_control(key, seed, year),
            line_count=snapshot.line_counts.get(key, 0),
        )
    return out


def metric_values(table: Mapping[FileKey, FileYearMetrics], metric: str) -> dict[FileKey, float]:
    out = {}
    for key, row in table.items():
        v = row.value(metric)
        if v is not None:
            out[key] = v
    return out
