"""Brute-force reference implementations used as test oracles.

Everything here is written for clarity, in exact arithmetic where possible,
and shares no code with the package.
"""

from __future__ import annotations

from fractions import Fraction
from math import sqrt


def confusion_oracle(hits, positives, universe):
    hits, positives, universe = set(hits), set(positives), set(universe)
    n = len(universe)
    tp = fp = fn = 0
    for x in universe:
        h, p = x in hits, x in positives
        tp += h and p
        fp += h and not p
        fn += p and not h
    out = {"hit_rate": Fraction(len(hits), n)}
    out["precision"] = Fraction(tp, tp + fp) if tp + fp else None
    out["recall"] = Fraction(tp, tp + fn) if tp + fn else None
    out["jaccard"] = Fraction(tp, tp + fp + fn) if tp + fp + fn else None
    if out["precision"] is None or not positives:
        out["lift"] = None
    else:
        out["lift"] = out["precision"] / Fraction(len(positives), n) - 1
    return out


def pearson_oracle(xs, ys):
    xs = [Fraction(x) for x in xs]
    ys = [Fraction(y) for y in ys]
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    cov = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    vx = sum((x - mx) ** 2 for x in xs)
    vy = sum((y - my) ** 2 for y in ys)
    if vx == 0 or vy == 0:
        return None
    return float(cov) / sqrt(float(vx) * float(vy))


def percentile_groups(values):
    """Quality groups by explicit rank: the floor(n/4) smallest values (ties
    broken by key) are high, the floor(n/4) largest low."""
    ranked = sorted(values, key=lambda k: (values[k], k))
    q = len(ranked) // 4
    return set(ranked[:q]), set(ranked[q:len(ranked) - q]), set(ranked[len(ranked) - q:])


def removal_oracle(before, after, smell):
    """``before``/``after`` map path -> {smell: count}; a path missing from
    ``after`` was deleted."""
    opp = [p for p, c in before.items() if c.get(smell, 0) > 0 and p in after]
    removed = [p for p in opp if after[p].get(smell, 0) == 0]
    return Fraction(len(removed), len(opp)) if opp else None


def previous_touch_detection(events, year):
    """``events`` is a list of (timestamp, is_corrective, year). Mean days from
    the previous touch to each corrective touch in ``year``, scanning the whole
    list for the latest strictly earlier touch."""
    gaps = []
    for t, corrective, y in events:
        if not corrective or y != year:
            continue
        earlier = [u for u, _, _ in events if u < t]
        if earlier:
            gaps.append((t - max(earlier)) / 86400)
    return sum(gaps) / len(gaps) if gaps else None
