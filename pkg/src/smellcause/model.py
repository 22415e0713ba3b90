"""Quality odds of files free of every potentially causal smell."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from smellcause.battery import LENGTH_GROUPS
from smellcause.ingest import FileKey, SmellSnapshot
from smellcause.metrics import HIGH, LOW, QualityGrouping


@dataclass(frozen=True)
class GroupModelResult:
    metric_name: str
    n_files: int
    n_clean: int
    clean_hit_rate: float
    p_high_given_clean: float | None
    p_low_given_clean: float | None
    lift_high: float | None
    per_length_group: dict[str, float | None] = field(default_factory=dict)

    @property
    def smelly_hit_rate(self) -> float:
        return 1.0 - self.clean_hit_rate


def _high_lift(clean: set[FileKey], universe: set[FileKey], high: set[FileKey]) -> float | None:
    if not clean or not universe or not high & universe:
        return None
    n_high = len(high & universe)
    clean_high = len(high & clean)
    # (clean_high/|clean|) / (n_high/|universe|) - 1 with one division
    return (clean_high * len(universe) - n_high * len(clean)) / (n_high * len(clean))


def smell_free_analysis(
    potential_smells: Iterable[str],
    snapshot: SmellSnapshot,
    grouping: QualityGrouping,
    lengths: Mapping[FileKey, str] | None = None,
) -> GroupModelResult:
    """Share of clean files and their chance of high and low quality.

    A clean file has count zero for every smell in ``potential_smells``.
    ``lengths`` maps files to short/medium/long and enables the per-length
    breakdown of the high-quality lift.
    """
    smells = sorted(set(potential_smells))
    universe = grouping.files
    clean = {k for k in universe if all(snapshot.count(k, s) == 0 for s in smells)}
    high, low = grouping.members(HIGH), grouping.members(LOW)
    n, c = len(universe), len(clean)
    per_length = {}
    if lengths is not None:
        for g in LENGTH_GROUPS:
            members = {k for k in universe if lengths.get(k) == g}
            per_length[g] = _high_lift(clean & members, members, high)
    return GroupModelResult(
        metric_name=grouping.metric_name,
        n_files=n,
        n_clean=c,
        clean_hit_rate=c / n if n else 0.0,
        p_high_given_clean=len(clean & high) / c if c else None,
        p_low_given_clean=len(clean & low) / c if c else None,
        lift_high=_high_lift(clean, universe, high),
        per_length_group=per_length,
    )
