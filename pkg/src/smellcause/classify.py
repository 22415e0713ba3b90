"""Keyword model for labeling corrective (bug-fix) commits."""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from smellcause.ingest import CommitRecord

CORRECTIVE = "corrective"
NEGATION = "negation"

DEFAULT_CORRECTIVE_TOKENS = (
    "fix", "fixes", "fixed", "fixing", "bugfix", "hotfix",
    "bug", "bugs", "defect", "defects", "fault", "faults",
    "error", "errors", "fail", "fails", "failing", "failure", "failures",
    "crash", "crashes", "repair", "patch", "regression",
    "wrong", "incorrect", "leak", "npe",
)

# phrases that mention a corrective word without describing a fix
DEFAULT_NEGATIONS = (
    r"not\s+a\s+bug",
    r"no\s+bugs?",
    r"error\s+messages?",
    r"typos?",
)


@dataclass(frozen=True)
class ClassifierRule:
    pattern: str
    polarity: str = CORRECTIVE

    def __post_init__(self):
        if not self.pattern:
            raise ValueError("rule pattern must be non-empty")
        if self.polarity not in (CORRECTIVE, NEGATION):
            raise ValueError(f"unknown polarity {self.polarity!r}")

    @property
    def regex(self) -> re.Pattern[str]:
        return _compile(self.pattern)


_cache: dict[str, re.Pattern[str]] = {}


def _compile(pattern: str) -> re.Pattern[str]:
    rx = _cache.get(pattern)
    if rx is None:
        rx = _cache[pattern] = re.compile(rf"\b(?:{pattern})\b", re.IGNORECASE)
    return rx


def build_rules(
    tokens: Iterable[str] = DEFAULT_CORRECTIVE_TOKENS,
    negations: Iterable[str] = DEFAULT_NEGATIONS,
) -> tuple[ClassifierRule, ...]:
    """Rules from plain corrective tokens and negation regexes."""
    rules = [ClassifierRule(re.escape(t.strip())) for t in tokens if t.strip()]
    if not rules:
        raise ValueError("rule set needs at least one corrective token")
    rules += [ClassifierRule(p, NEGATION) for p in negations]
    return tuple(rules)


DEFAULT_RULES = build_rules()


def classify_commit(message: str, rules: Sequence[ClassifierRule] = DEFAULT_RULES) -> bool:
    """True when the message shows corrective evidence and no negation."""
    hit = False
    for rule in rules:
        if rule.regex.search(message):
            if rule.polarity == NEGATION:
                return False
            hit = True
    return hit


def label_commits(
    commits: Iterable[CommitRecord], rules: Sequence[ClassifierRule] = DEFAULT_RULES
) -> list[CommitRecord]:
    return [dataclasses.replace(c, is_corrective=classify_commit(c.message, rules)) for c in commits]
