"""The five causality properties per (smell, target metric) and the verdicts.

A smell is *Potential* when it has all five properties with a positive
precision lift, *Robust* when the lifts are also at least ``robust_lift``,
and *Almost* when all five hold with lifts of at least ``almost_lift``.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from smellcause.ingest import FileKey, SmellSnapshot
from smellcause.metrics import HIGH, LOW, OTHER, QualityGrouping
from smellcause.stats import ConfusionStats, confusion, lift_from_counts, pearson
from smellcause.temporal import RemovalResult, YearPair, cochange_stats

PREDICTIVE = "predictive"
MONOTONICITY = "monotonicity"
COCHANGE = "cochange"
TWINS = "twins"
LENGTH = "length"
PROPERTIES = (PREDICTIVE, MONOTONICITY, COCHANGE, TWINS, LENGTH)

SHORT, MEDIUM, LONG = "short", "medium", "long"
LENGTH_GROUPS = (SHORT, MEDIUM, LONG)

ROBUST, POTENTIAL, ALMOST, REJECTED = "Robust", "Potential", "Almost", "Rejected"


@dataclass(frozen=True)
class Thresholds:
    min_files: int = 200
    min_twin_cells: int = 10
    robust_lift: float = 0.10
    almost_lift: float = -0.10
    length_corr_cap: float = 0.5
    min_removal_opportunities: int = 200


@dataclass(frozen=True)
class PropertyResult:
    """Outcome of one property check.

    ``lifts`` are the precision lifts the property depends on (empty for
    monotonicity) and ``gate_ok`` covers every non-lift condition, so the
    same result can be re-judged at the Robust and Almost thresholds.
    """

    property: str
    passed: bool
    stat: float | None
    support: int
    detail: dict = field(default_factory=dict)
    lifts: tuple[float | None, ...] = ()
    gate_ok: bool = True
    reason: str | None = None

    def holds(self, min_lift: float | None = None) -> bool:
        """Whether the property holds with every lift >= ``min_lift``;
        ``None`` means the base rule, lift strictly positive."""
        if min_lift is None:
            return self.passed
        if not self.gate_ok or any(lift is None for lift in self.lifts):
            return False
        return all(lift >= min_lift for lift in self.lifts)


def _result(prop, stat, support, lifts, gate_ok, detail, reason=None) -> PropertyResult:
    lifts = tuple(lifts)
    passed = gate_ok and all(lift is not None and lift > 0 for lift in lifts)
    if not passed and reason is None:
        if any(lift is None for lift in lifts):
            reason = "undefined lift"
        elif not gate_ok:
            reason = "gate failed"
        else:
            reason = "non-positive lift"
    return PropertyResult(prop, passed, stat, support, detail, lifts, gate_ok, None if passed else reason)


def smell_hits(smell: str, snapshot: SmellSnapshot, universe: Iterable[FileKey]) -> set[FileKey]:
    return {k for k in universe if snapshot.count(k, smell) > 0}


def eval_predictive(
    smell: str,
    grouping: QualityGrouping,
    values: Mapping[FileKey, float],
    snapshot: SmellSnapshot,
    thresholds: Thresholds = Thresholds(),
) -> tuple[PropertyResult, ConfusionStats]:
    universe = grouping.files
    hits = smell_hits(smell, snapshot, universe)
    cs = confusion(hits, grouping.members(LOW), universe, values)
    reasons = []
    if cs.hits < thresholds.min_files:
        reasons.append(f"support {cs.hits} < {thresholds.min_files}")
    mean_ok = cs.mean_given_hit is not None and cs.mean_given_hit > cs.mean_overall
    if not mean_ok:
        reasons.append("mean given smell not above overall mean")
    gate_ok = not reasons
    if cs.precision_lift is None:
        reasons.insert(0, "no hits")
    res = _result(
        PREDICTIVE, cs.precision_lift, cs.hits, [cs.precision_lift], gate_ok,
        {"precision": cs.precision, "mean_given_hit": cs.mean_given_hit, "mean": cs.mean_overall},
        "; ".join(reasons) or None,
    )
    return res, cs


def group_hit_rates(smell: str, grouping: QualityGrouping, snapshot: SmellSnapshot) -> dict[str, float | None]:
    rates = {}
    for g in (HIGH, OTHER, LOW):
        members = grouping.members(g)
        rates[g] = len(smell_hits(smell, snapshot, members)) / len(members) if members else None
    return rates


def eval_monotonicity(smell: str, grouping: QualityGrouping, snapshot: SmellSnapshot) -> PropertyResult:
    rates = group_hit_rates(smell, grouping, snapshot)
    h, o, lo = rates[HIGH], rates[OTHER], rates[LOW]
    support = len(smell_hits(smell, snapshot, grouping.files))
    if None in (h, o, lo):
        return PropertyResult(MONOTONICITY, False, None, support, rates, (), False, "empty quality group")
    ok = h < o < lo
    return PropertyResult(MONOTONICITY, ok, lo - h, support, rates, (), ok,
                          None if ok else "hit rates not strictly increasing")


def eval_twins(
    smell: str,
    grouping: QualityGrouping,
    snapshot: SmellSnapshot,
    owners: Mapping[FileKey, str],
    thresholds: Thresholds = Thresholds(),
) -> PropertyResult:
    """Predictive lift restricted to (owner, repo) cells holding both smelly
    and clean files, pooled over those cells."""
    cells: dict[tuple[str, str], list[FileKey]] = defaultdict(list)
    for key in grouping.files:
        owner = owners.get(key)
        if owner is not None:
            cells[(owner, key.repo_id)].append(key)
    low = grouping.members(LOW)
    n = h = p = tp = n_cells = 0
    for members in cells.values():
        flags = [snapshot.count(k, smell) > 0 for k in members]
        if all(flags) or not any(flags):
            continue
        n_cells += 1
        n += len(members)
        for k, is_hit in zip(members, flags):
            is_pos = k in low
            h += is_hit
            p += is_pos
            tp += is_hit and is_pos
    if n_cells < thresholds.min_twin_cells:
        return PropertyResult(TWINS, False, None, n_cells, {"files": n}, (None,), False,
                              f"{n_cells} twin cells < {thresholds.min_twin_cells}")
    lift = lift_from_counts(tp, h, p, n)
    detail = {"files": n, "precision": tp / h if h else None, "positive_rate": p / n}
    return _result(TWINS, lift, n_cells, [lift], True, detail)


def length_groups(line_counts: Mapping[FileKey, int]) -> tuple[dict[FileKey, str], tuple[int, int]]:
    """Assign files to short (<= q25), long (>= q75) and medium length groups.

    ``q25`` is the line count of the ``floor(n/4)``-th shortest file and ``q75``
    that of the ``floor(n/4)``-th longest, using the same ordering as the
    quality grouping.
    """
    items = sorted(line_counts.items(), key=lambda kv: (kv[1], kv[0].repo_id, kv[0].file_path))
    n = len(items)
    if n < 4:
        raise ValueError("need at least 4 files for length groups")
    quarter = n // 4
    q25, q75 = items[quarter - 1][1], items[n - quarter][1]
    out = {}
    for key, lines in items:
        if lines <= q25:
            out[key] = SHORT
        elif lines >= q75:
            out[key] = LONG
        else:
            out[key] = MEDIUM
    return out, (q25, q75)


def eval_length(
    smell: str,
    grouping: QualityGrouping,
    snapshot: SmellSnapshot,
    lengths: Mapping[FileKey, str],
    thresholds: Thresholds = Thresholds(),
) -> PropertyResult:
    universe = sorted(grouping.files)
    low = grouping.members(LOW)
    lifts = []
    detail: dict = {}
    for g in LENGTH_GROUPS:
        members = [k for k in universe if lengths.get(k) == g]
        hits = [k for k in members if snapshot.count(k, smell) > 0]
        pos = [k for k in members if k in low]
        tp = sum(1 for k in hits if k in low)
        lift = lift_from_counts(tp, len(hits), len(pos), len(members))
        lifts.append(lift)
        detail[g] = lift
    counts = [snapshot.count(k, smell) for k in universe]
    lines = [snapshot.line_counts.get(k, 0) for k in universe]
    r = pearson(counts, lines) if len(universe) >= 2 else None
    detail["pearson"] = r
    reasons = []
    gate_ok = r is not None and r < thresholds.length_corr_cap
    if r is None:
        reasons.append("no-variance")
    elif not gate_ok:
        reasons.append(f"pearson with line count {r:.3f} >= {thresholds.length_corr_cap}")
    for g, lift in zip(LENGTH_GROUPS, lifts):
        if lift is None:
            reasons.append(f"{g}: lift undefined")
        elif lift <= 0:
            reasons.append(f"{g}: lift {lift:.3f} <= 0")
    defined = [x for x in lifts if x is not None]
    stat = min(defined) if len(defined) == len(lifts) else None
    support = sum(1 for k in universe if snapshot.count(k, smell) > 0)
    return _result(LENGTH, stat, support, lifts, gate_ok, detail, "; ".join(reasons) or None)


def eval_cochange_property(
    smell: str,
    metric: str,
    year_pairs: Sequence[YearPair] | None,
    thresholds: Thresholds = Thresholds(),
) -> PropertyResult:
    if year_pairs is None:
        return PropertyResult(COCHANGE, False, None, 0, {}, (None,), False, "skipped: needs two years")
    cc = cochange_stats(smell, metric, year_pairs)
    detail = {"precision": cc.precision, "smell_improvements": cc.support,
              "opportunities": cc.opportunities}
    gate_ok = cc.opportunities >= thresholds.min_files
    reason = None
    if cc.support == 0:
        reason = "smell never improves"
    elif not gate_ok:
        reason = f"{cc.opportunities} opportunity pairs < {thresholds.min_files}"
    return _result(COCHANGE, cc.lift, cc.opportunities, [cc.lift], gate_ok, detail, reason)


@dataclass(frozen=True)
class Verdict:
    verdict: str
    properties_held: int
    is_potential: bool
    is_robust: bool
    is_almost: bool


def classify_smell(results: Mapping[str, PropertyResult], thresholds: Thresholds = Thresholds()) -> Verdict:
    held = sum(results[p].passed for p in PROPERTIES)
    potential = held == len(PROPERTIES)
    robust = potential and all(
        results[p].holds(thresholds.robust_lift) for p in (PREDICTIVE, TWINS, LENGTH, COCHANGE)
    )
    almost = all(results[p].holds(thresholds.almost_lift) for p in PROPERTIES)
    if robust:
        verdict = ROBUST
    elif potential:
        verdict = POTENTIAL
    elif almost:
        verdict = ALMOST
    else:
        verdict = REJECTED
    return Verdict(verdict, held, potential, robust, almost)


@dataclass(frozen=True)
class SmellAssessment:
    smell_name: str
    smell_group: str
    metric_name: str
    results: dict[str, PropertyResult]
    confusion: ConfusionStats
    cochange_lift: float | None
    twins_lift: float | None
    removal_probability: float | None
    verdict: str
    properties_held: int
    is_potential: bool
    is_robust: bool
    is_almost: bool


@dataclass
class MetricContext:
    """Everything the battery needs for one target metric in one year."""

    metric: str
    grouping: QualityGrouping
    values: dict[FileKey, float]
    snapshot: SmellSnapshot
    owners: dict[FileKey, str]
    lengths: dict[FileKey, str]
    year_pairs: list[YearPair] | None = None
    removal: dict[str, RemovalResult] = field(default_factory=dict)


def assess_smell(smell: str, ctx: MetricContext, thresholds: Thresholds = Thresholds()) -> SmellAssessment:
    predictive, cs = eval_predictive(smell, ctx.grouping, ctx.values, ctx.snapshot, thresholds)
    results = {
        PREDICTIVE: predictive,
        MONOTONICITY: eval_monotonicity(smell, ctx.grouping, ctx.snapshot),
        COCHANGE: eval_cochange_property(smell, ctx.metric, ctx.year_pairs, thresholds),
        TWINS: eval_twins(smell, ctx.grouping, ctx.snapshot, ctx.owners, thresholds),
        LENGTH: eval_length(smell, ctx.grouping, ctx.snapshot, ctx.lengths, thresholds),
    }
    v = classify_smell(results, thresholds)
    removal = ctx.removal.get(smell)
    removal_p = None
    if removal is not None and removal.opportunities >= thresholds.min_removal_opportunities:
        removal_p = removal.probability
    return SmellAssessment(
        smell_name=smell,
        smell_group=ctx.snapshot.smell_groups.get(smell, "Unknown"),
        metric_name=ctx.metric,
        results=results,
        confusion=cs,
        cochange_lift=results[COCHANGE].stat,
        twins_lift=results[TWINS].stat,
        removal_probability=removal_p,
        verdict=v.verdict,
        properties_held=v.properties_held,
        is_potential=v.is_potential,
        is_robust=v.is_robust,
        is_almost=v.is_almost,
    )


def run_battery(
    ctx: MetricContext, smells: Iterable[str], thresholds: Thresholds = Thresholds()
) -> list[SmellAssessment]:
    return [assess_smell(s, ctx, thresholds) for s in sorted(set(smells))]
