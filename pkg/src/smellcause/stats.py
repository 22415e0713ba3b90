"""Confusion-matrix statistics and correlation used by every property check.

Undefined statistics are ``None``; they never default to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Collection, Mapping, Sequence


@dataclass(frozen=True)
class ConfusionStats:
    n: int
    hits: int
    positives: int
    tp: int
    hit_rate: float
    positive_rate: float
    precision: float | None
    recall: float | None
    jaccard: float | None
    precision_lift: float | None
    mean_given_hit: float | None
    mean_overall: float | None

    @property
    def fp(self) -> int:
        return self.hits - self.tp

    @property
    def fn(self) -> int:
        return self.positives - self.tp


def lift_from_counts(tp: int, hits: int, positives: int, n: int) -> float | None:
    """``P(pos|hit) / P(pos) - 1`` with a single division."""
    if hits == 0 or positives == 0 or n == 0:
        return None
    return (tp * n - hits * positives) / (hits * positives)


def _mean(keys: Collection, values: Mapping) -> float | None:
    vals = [values[k] for k in keys if k in values]
    if not vals:
        return None
    return math.fsum(vals) / len(vals)


def confusion(
    hits: Collection,
    positives: Collection,
    universe: Collection,
    metric_values: Mapping | None = None,
) -> ConfusionStats:
    """Supervised-learning statistics of ``hits`` as a detector of ``positives``.

    Args:
        hits: files flagged by the smell.
        positives: files in the concept (the low-quality group).
        universe: all files under consideration; must be non-empty and
            contain both other sets.
        metric_values: optional raw target-metric values, used for the
            mean over hits and the overall mean.

    Returns:
        A :class:`ConfusionStats`. Precision and lift are None when there are
        no hits; recall is None when there are no positives.
    """
    universe = set(universe)
    if not universe:
        raise ValueError("universe must be non-empty")
    hits, positives = set(hits), set(positives)
    if not hits <= universe or not positives <= universe:
        raise ValueError("hits and positives must be subsets of the universe")
    n, h, p = len(universe), len(hits), len(positives)
    tp = len(hits & positives)
    union = h + p - tp
    mean_hit = mean_all = None
    if metric_values is not None:
        mean_hit = _mean(hits, metric_values)
        mean_all = _mean(universe, metric_values)
    return ConfusionStats(
        n=n, hits=h, positives=p, tp=tp,
        hit_rate=h / n,
        positive_rate=p / n,
        precision=tp / h if h else None,
        recall=tp / p if p else None,
        jaccard=tp / union if union else None,
        precision_lift=lift_from_counts(tp, h, p, n),
        mean_given_hit=mean_hit,
        mean_overall=mean_all,
    )


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Sample Pearson correlation; None when either series has no variance."""
    if len(xs) != len(ys):
        raise ValueError("series must have equal lengths")
    n = len(xs)
    if n < 2:
        raise ValueError("need at least two observations")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0 or syy == 0:
        return None
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    r = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))
