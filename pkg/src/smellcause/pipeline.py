"""Run configuration and the end-to-end analysis over one corpus."""

from __future__ import annotations

import logging
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, Mapping, Sequence

from smellcause.battery import MetricContext, SmellAssessment, Thresholds, length_groups, run_battery
from smellcause.classify import DEFAULT_CORRECTIVE_TOKENS, DEFAULT_NEGATIONS, build_rules, label_commits
from smellcause.ingest import (
    CommitRecord,
    FileKey,
    IngestError,
    SmellSnapshot,
    load_commits,
    load_line_counts,
    load_smell_report,
    select_eligible_files,
)
from smellcause.metrics import (
    METRICS,
    CommitIndex,
    FileYearMetrics,
    GroupingError,
    QualityGrouping,
    compute_file_metrics,
    metric_values,
    partition_quality,
)
from smellcause.model import GroupModelResult, smell_free_analysis
from smellcause.temporal import (
    CochangeResult,
    RemovalResult,
    YearPair,
    build_year_pairs,
    cochange_stats,
    removal_probability,
    stability,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """All inputs and thresholds of one run.

    ``smell_reports`` and ``line_counts`` are path templates containing
    ``{year}``. Relative paths resolve against ``base_dir``.
    """

    commits: str | None = None
    smell_reports: str | None = None
    smell_format: str = "generic-csv"
    line_counts: str | None = None
    years: tuple[int, ...] = ()
    metrics: tuple[str, ...] = METRICS
    min_commits: int = 10
    min_files: int = 200
    min_twin_cells: int = 10
    min_removal_opportunities: int = 200
    robust_lift: float = 0.10
    almost_lift: float = -0.10
    length_corr_cap: float = 0.5
    quartiles: tuple[float, float, float] = (0.25, 0.50, 0.25)
    corrective_tokens: tuple[str, ...] = DEFAULT_CORRECTIVE_TOKENS
    negation_patterns: tuple[str, ...] = DEFAULT_NEGATIONS
    test_pattern: str = "test"
    seed: int = 0
    model_year: int | None = None
    out: str = "report"
    base_dir: str = "."

    def __post_init__(self):
        if abs(sum(self.quartiles) - 1.0) > 1e-9:
            raise ConfigError(f"quartile fractions must sum to 1, got {self.quartiles}")
        unknown = set(self.metrics) - set(METRICS)
        if unknown:
            raise ConfigError(f"unknown metrics {sorted(unknown)}; choose from {', '.join(METRICS)}")
        if self.min_commits < 1 or self.min_files < 0:
            raise ConfigError("min_commits must be >= 1 and min_files >= 0")
        if len(set(self.years)) != len(self.years):
            raise ConfigError("years must be distinct")

    @property
    def thresholds(self) -> Thresholds:
        return Thresholds(
            min_files=self.min_files,
            min_twin_cells=self.min_twin_cells,
            robust_lift=self.robust_lift,
            almost_lift=self.almost_lift,
            length_corr_cap=self.length_corr_cap,
            min_removal_opportunities=self.min_removal_opportunities,
        )

    def resolve(self, template: str, year: int | None = None) -> Path:
        path = Path(template.format(year=year) if year is not None else template)
        return path if path.is_absolute() else Path(self.base_dir) / path

    def to_dict(self) -> dict:
        """Settings that influence results; ``out`` and ``base_dir`` excluded."""
        d = {}
        for f in fields(self):
            if f.name in ("out", "base_dir"):
                continue
            v = getattr(self, f.name)
            d[f.name] = list(v) if isinstance(v, tuple) else v
        return d


_TUPLE_KEYS = {"years", "metrics", "quartiles", "corrective_tokens", "negation_patterns"}


def make_config(values: Mapping, base_dir: str | Path = ".") -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    kw = {}
    for k, v in values.items():
        if k in _TUPLE_KEYS and v is not None:
            if isinstance(v, str):
                v = [x.strip() for x in v.split(",") if x.strip()]
            v = tuple(int(x) for x in v) if k == "years" else tuple(v)
        kw[k] = v
    kw.setdefault("base_dir", str(base_dir))
    return RunConfig(**kw)


def load_config(path: str | Path, overrides: Mapping | None = None) -> RunConfig:
    path = Path(path)
    with open(path, "rb") as fh:
        try:
            values = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    nested = [k for k, v in values.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"{path}: config must be flat, found tables {nested}")
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return make_config(values, base_dir=path.parent)


@dataclass
class Analysis:
    config: RunConfig
    battery_year: int
    model_year: int | None
    tables: dict[int, dict[FileKey, FileYearMetrics]]
    groupings: dict[str, QualityGrouping]
    model_groupings: dict[str, QualityGrouping]
    assessments: dict[str, list[SmellAssessment]]
    cochange: dict[str, dict[str, CochangeResult]]
    removal: dict[str, RemovalResult]
    stability: dict[str, float | None]
    models: dict[str, GroupModelResult]
    length_cuts: tuple[int, int]
    smell_groups: dict[str, str]
    notices: list[str] = field(default_factory=list)

    def verdicts(self, metric: str) -> dict[str, str]:
        return {a.smell_name: a.verdict for a in self.assessments.get(metric, [])}


MetricTransform = Callable[[str, float], float]


def metric_series(table, metric: str, transform: MetricTransform | None = None) -> dict[FileKey, float]:
    vals = metric_values(table, metric)
    if transform is not None:
        vals = {k: transform(metric, v) for k, v in vals.items()}
    return vals


def _metric_maps(table, metrics: Sequence[str], transform) -> dict[FileKey, dict[str, float]]:
    out: dict[FileKey, dict[str, float]] = {}
    for m in metrics:
        for k, v in metric_series(table, m, transform).items():
            out.setdefault(k, {})[m] = v
    return out


def analyze_corpus(
    commits: Sequence[CommitRecord],
    snapshots: Mapping[int, SmellSnapshot],
    config: RunConfig,
    metric_transform: MetricTransform | None = None,
) -> Analysis:
    """Metrics, battery, temporal analyses and the smell-free model for one corpus.

    ``metric_transform(metric, value)`` optionally rescales every target
    metric value before grouping; used to check invariance of verdicts.
    """
    notices: list[str] = []
    rules = build_rules(config.corrective_tokens, config.negation_patterns)
    labeled = label_commits(commits, rules)
    index = CommitIndex(labeled)

    years = sorted(config.years) if config.years else sorted(snapshots)
    missing = [y for y in years if y not in snapshots]
    for y in missing:
        notices.append(f"no smell snapshot for {y}; year skipped")
    years = [y for y in years if y in snapshots]
    if not years:
        raise IngestError("no year has a smell snapshot")

    tables: dict[int, dict[FileKey, FileYearMetrics]] = {}
    for y in years:
        eligible = select_eligible_files(labeled, y, snapshots[y], config.min_commits, config.test_pattern)
        tables[y] = compute_file_metrics(index, eligible, y, snapshots[y], config.seed)
    battery_year = years[-1]
    table = tables[battery_year]
    if not table:
        raise IngestError(f"no eligible files in {battery_year}")
    snap = snapshots[battery_year]
    lengths, cuts = length_groups({k: row.line_count for k, row in table.items()})
    owners = {k: index.owner(k, battery_year) for k in table}

    consecutive = [(y, y + 1) for y in years if y + 1 in tables]
    pairs_by_year: list[list[YearPair]] = []
    for y0, y1 in consecutive:
        pairs_by_year.append(build_year_pairs(
            snapshots[y0], snapshots[y1],
            _metric_maps(tables[y0], config.metrics, metric_transform),
            _metric_maps(tables[y1], config.metrics, metric_transform),
        ))
    all_pairs = [p for pairs in pairs_by_year for p in pairs] if pairs_by_year else None
    if all_pairs is None:
        notices.append("fewer than two consecutive years: co-change, removal and stability skipped")

    smells = snap.smells()
    removal: dict[str, RemovalResult] = {}
    stab: dict[str, float | None] = {}
    if all_pairs is not None:
        for s in smells:
            removal[s] = removal_probability(s, all_pairs)
            stab[s] = stability(s, pairs_by_year)

    groupings: dict[str, QualityGrouping] = {}
    assessments: dict[str, list[SmellAssessment]] = {}
    cochange: dict[str, dict[str, CochangeResult]] = {}
    for m in config.metrics:
        values = metric_series(table, m, metric_transform)
        try:
            grouping = partition_quality(values, m, config.quartiles)
        except GroupingError as exc:
            notices.append(f"{m}: {exc}; metric skipped")
            continue
        groupings[m] = grouping
        ctx = MetricContext(m, grouping, values, snap, owners, lengths, all_pairs, removal)
        assessments[m] = run_battery(ctx, smells, config.thresholds)
        if all_pairs is not None:
            cochange[m] = {s: cochange_stats(s, m, all_pairs) for s in smells}

    model_year = config.model_year
    if model_year is None:
        model_year = years[-2] if len(years) >= 2 else None
    models: dict[str, GroupModelResult] = {}
    model_groupings: dict[str, QualityGrouping] = {}
    if model_year is None:
        notices.append("no separate model year: smell-free group model skipped")
    elif model_year not in tables or not tables[model_year]:
        notices.append(f"model year {model_year} has no eligible files: group model skipped")
        model_year = None
    else:
        mtable = tables[model_year]
        mlengths, _ = length_groups({k: row.line_count for k, row in mtable.items()})
        for m in groupings:
            try:
                mg = partition_quality(metric_series(mtable, m, metric_transform), m, config.quartiles)
            except GroupingError as exc:
                notices.append(f"{m} in {model_year}: {exc}; group model skipped")
                continue
            model_groupings[m] = mg
            potential = [a.smell_name for a in assessments[m] if a.is_potential]
            models[m] = smell_free_analysis(potential, snapshots[model_year], mg, mlengths)

    groups = {s: snap.smell_groups.get(s, "Unknown") for s in smells}
    for msg in notices:
        log.info(msg)
    return Analysis(
        config=config,
        battery_year=battery_year,
        model_year=model_year,
        tables=tables,
        groupings=groupings,
        model_groupings=model_groupings,
        assessments=assessments,
        cochange=cochange,
        removal=removal,
        stability=stab,
        models=models,
        length_cuts=cuts,
        smell_groups=groups,
        notices=notices,
    )


def load_inputs(config: RunConfig) -> tuple[list[CommitRecord], dict[int, SmellSnapshot], dict[str, Path]]:
    """Read commits and per-year snapshots named by ``config``.

    Returns the commits, the snapshots and the input files keyed by the name
    recorded in the manifest.
    """
    if not config.commits or not config.smell_reports:
        raise ConfigError("config needs 'commits' and 'smell_reports'")
    if not config.years:
        raise ConfigError("config needs 'years'")
    inputs: dict[str, Path] = {}
    cpath = config.resolve(config.commits)
    inputs[config.commits] = cpath
    with open(cpath, encoding="utf-8") as fh:
        commits = load_commits(fh)
    snapshots: dict[int, SmellSnapshot] = {}
    for y in config.years:
        spath = config.resolve(config.smell_reports, y)
        if not spath.exists():
            log.warning("missing smell report for %s: %s", y, spath)
            continue
        lines = None
        if config.line_counts:
            lpath = config.resolve(config.line_counts, y)
            if lpath.exists():
                inputs[config.line_counts.format(year=y)] = lpath
                lines = load_line_counts(lpath.read_text(encoding="utf-8"))
        inputs[config.smell_reports.format(year=y)] = spath
        snapshots[y] = load_smell_report(spath.read_text(encoding="utf-8"), config.smell_format, y, line_counts=lines)
    return commits, snapshots, inputs
