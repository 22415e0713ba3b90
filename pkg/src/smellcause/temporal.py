"""Year-over-year analyses: co-change, removal probability and smell stability."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from smellcause.ingest import FileKey, SmellSnapshot
from smellcause.stats import lift_from_counts, pearson


@dataclass(frozen=True)
class YearPair:
    """One file observed in two consecutive snapshots.

    ``smells_to`` is None when the file no longer exists in the later
    snapshot. ``metrics_from``/``metrics_to`` hold only metrics defined for
    the file in the respective year, and are empty when the file was not
    eligible in that year.
    """

    file: FileKey
    year_from: int
    year_to: int
    smells_from: Mapping[str, int]
    smells_to: Mapping[str, int] | None
    metrics_from: Mapping[str, float] = field(default_factory=dict)
    metrics_to: Mapping[str, float] = field(default_factory=dict)

    @property
    def file_alive_in_to(self) -> bool:
        return self.smells_to is not None

    @property
    def eligible_both(self) -> bool:
        return bool(self.metrics_from) and bool(self.metrics_to)

    def count_from(self, smell: str) -> int:
        return self.smells_from.get(smell, 0)

    def count_to(self, smell: str) -> int | None:
        if self.smells_to is None:
            return None
        return self.smells_to.get(smell, 0)

    @property
    def smell_delta(self) -> dict[str, int]:
        if self.smells_to is None:
            return {}
        names = set(self.smells_from) | set(self.smells_to)
        return {s: self.smells_to.get(s, 0) - self.smells_from.get(s, 0) for s in sorted(names)}

    @property
    def metric_delta(self) -> dict[str, float]:
        common = set(self.metrics_from) & set(self.metrics_to)
        return {m: self.metrics_to[m] - self.metrics_from[m] for m in sorted(common)}


@dataclass(frozen=True)
class CochangeResult:
    precision: float | None
    lift: float | None
    support: int
    opportunities: int
    metric_improvements: int


@dataclass(frozen=True)
class RemovalResult:
    probability: float | None
    opportunities: int
    removed: int


def build_year_pairs(
    snap_from: SmellSnapshot,
    snap_to: SmellSnapshot,
    metrics_from: Mapping[FileKey, Mapping[str, float]] | None = None,
    metrics_to: Mapping[FileKey, Mapping[str, float]] | None = None,
) -> list[YearPair]:
    """Pair every file of ``snap_from`` with its state in ``snap_to``.

    Files appearing only in the later snapshot carry no information for
    either analysis and are skipped.
    """
    if snap_to.snapshot_year != snap_from.snapshot_year + 1:
        raise ValueError("year pairs must be consecutive")
    metrics_from = metrics_from or {}
    metrics_to = metrics_to or {}
    pairs = []
    for key in sorted(snap_from.files()):
        alive = key in snap_to
        pairs.append(YearPair(
            file=key,
            year_from=snap_from.snapshot_year,
            year_to=snap_to.snapshot_year,
            smells_from=dict(snap_from.entries.get(key, {})),
            smells_to=dict(snap_to.entries.get(key, {})) if alive else None,
            metrics_from=dict(metrics_from.get(key, {})),
            metrics_to=dict(metrics_to.get(key, {})) if alive else {},
        ))
    return pairs


def cochange_stats(smell: str, metric: str, year_pairs: Iterable[YearPair]) -> CochangeResult:
    """Precision and lift of "smell count dropped" predicting "metric dropped".

    Opportunity pairs are files eligible in both years with the metric
    defined both times and the smell present in the earlier year.
    """
    opp = smell_imp = metric_imp = both = 0
    for p in year_pairs:
        if p.count_from(smell) <= 0 or metric not in p.metrics_from or metric not in p.metrics_to:
            continue
        opp += 1
        s_imp = p.count_to(smell) < p.count_from(smell)
        m_imp = p.metrics_to[metric] < p.metrics_from[metric]
        smell_imp += s_imp
        metric_imp += m_imp
        both += s_imp and m_imp
    precision = both / smell_imp if smell_imp else None
    lift = lift_from_counts(both, smell_imp, metric_imp, opp) if smell_imp else None
    return CochangeResult(precision, lift, smell_imp, opp, metric_imp)


def removal_probability(smell: str, year_pairs: Iterable[YearPair]) -> RemovalResult:
    """Share of files carrying ``smell`` that have none of it a year later.

    Files deleted in the later snapshot are not opportunities.
    """
    opp = removed = 0
    for p in year_pairs:
        if p.count_from(smell) <= 0 or not p.file_alive_in_to:
            continue
        opp += 1
        removed += p.count_to(smell) == 0
    return RemovalResult(removed / opp if opp else None, opp, removed)


def stability(smell: str, pairs_by_year: Sequence[Sequence[YearPair]]) -> float | None:
    """Year-to-year Pearson correlation of the smell's per-file counts,
    averaged over the year pairs where it is defined."""
    rs = []
    for pairs in pairs_by_year:
        alive = [p for p in pairs if p.file_alive_in_to]
        if len(alive) < 2:
            continue
        r = pearson([p.count_from(smell) for p in alive], [p.count_to(smell) for p in alive])
        if r is not None:
            rs.append(r)
    if not rs:
        return None
    return math.fsum(rs) / len(rs)
