"""Report bundle: delimited tables, markdown summary and figures.

CSV writers take an :class:`~smellcause.pipeline.Analysis`; the markdown
and figure renderers read only the CSVs, so ``smellcause report`` can rebuild
them from a bundle on disk.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from collections import Counter
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from smellcause import __version__  # noqa: E402
from smellcause.battery import PROPERTIES, SmellAssessment  # noqa: E402
from smellcause.metrics import CONCEPTS  # noqa: E402

POTENTIAL_COLUMNS = ["Smell", "Group", "Precision", "Mean", "Hit Rate", "Recall", "Jaccard",
                  "Co-change", "Twins", "Removal Probability"]
SUMMARY_COLUMNS = ["Concept", "Potential", "Robust", "Almost", "Predictive", "Cochange",
                  "Twins", "Monotonicity", "Length"]
GROUP_MODEL_COLUMNS = ["Metric", "Hit Rate", "High Quality", "Low Quality"]
GROUP_MODEL_EXTRA = ["Smelly Hit Rate", "Files", "Clean Files", "High Lift",
                     "Short High Lift", "Medium High Lift", "Long High Lift"]
PROPERTY_HEADERS = {"predictive": "Predictive", "monotonicity": "Monotonicity",
                    "cochange": "Cochange", "twins": "Twins", "length": "Length"}
ACTED_UPON_MIN_PROBABILITY = 0.15

FIGURE_STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 100,
    "font.size": 10,
    "axes.titlesize": 11,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "smellcause",
}


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, str):
        return x
    if isinstance(x, int):
        return str(x)
    return f"{x:.6f}"


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def _read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def _num(s: str | None) -> float | None:
    return float(s) if s not in (None, "") else None


def potential_row(a: SmellAssessment) -> list:
    cs = a.confusion
    return [a.smell_name, a.smell_group, cs.precision, cs.mean_given_hit, cs.hit_rate, cs.recall,
            cs.jaccard, a.cochange_lift, a.twins_lift, a.removal_probability]


def _by_precision(assessments: Iterable[SmellAssessment]) -> list[SmellAssessment]:
    return sorted(assessments, key=lambda a: (-(a.confusion.precision or 0.0), a.smell_name))


def write_metrics_table(path: Path, table) -> Path:
    rows = []
    for key in sorted(table):
        r = table[key]
        rows.append([key.repo_id, key.file_path, r.commit_count, r.ccp, r.coupling,
                     r.duration_hours, r.detection_days, r.random_control, r.line_count])
    return _write_csv(path, ["repo", "file", "commits", "ccp", "coupling", "duration_hours",
                             "detection_days", "random", "lines"], rows)


def write_grouping(path: Path, grouping, values: Mapping) -> Path:
    rows = [[k.repo_id, k.file_path, values.get(k), grouping.assignment[k]]
            for k in sorted(grouping.assignment)]
    return _write_csv(path, ["repo", "file", "value", "group"], rows)


def write_bundle(analysis, out_dir: str | Path) -> list[Path]:
    """Write every CSV of the bundle and return the paths written."""
    from smellcause.pipeline import metric_series

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    cfg = analysis.config

    for year, table in sorted(analysis.tables.items()):
        written.append(write_metrics_table(out / f"metrics_{year}.csv", table))
    for m, g in analysis.groupings.items():
        vals = metric_series(analysis.tables[analysis.battery_year], m, None)
        written.append(write_grouping(out / f"groups_{m}_{analysis.battery_year}.csv", g, vals))
    for m, g in analysis.model_groupings.items():
        vals = metric_series(analysis.tables[analysis.model_year], m, None)
        written.append(write_grouping(out / f"groups_{m}_{analysis.model_year}.csv", g, vals))

    summary_rows, matrix_rows = [], []
    for m, items in analysis.assessments.items():
        potential = _by_precision(a for a in items if a.is_potential)
        written.append(_write_csv(out / f"potential_{m}.csv", POTENTIAL_COLUMNS,
                                  [potential_row(a) for a in potential]))
        detail_rows = []
        for a in _by_precision(items):
            res = a.results
            detail_rows.append(potential_row(a) + [
                a.confusion.precision_lift, a.confusion.mean_overall, a.confusion.hits,
                res["monotonicity"].detail.get("high"), res["monotonicity"].detail.get("other"),
                res["monotonicity"].detail.get("low"),
                res["length"].detail.get("short"), res["length"].detail.get("medium"),
                res["length"].detail.get("long"), res["length"].detail.get("pearson"),
                res["twins"].support, res["cochange"].support,
                a.properties_held, a.verdict,
                " | ".join(f"{p}: {res[p].reason}" for p in PROPERTIES if res[p].reason),
            ])
        written.append(_write_csv(out / f"assessment_{m}.csv", POTENTIAL_COLUMNS + [
            "Precision Lift", "Mean Overall", "Hits", "Hit Rate High", "Hit Rate Other",
            "Hit Rate Low", "Short Lift", "Medium Lift", "Long Lift", "Length Pearson",
            "Twin Cells", "Cochange Opportunities", "Properties", "Verdict", "Reasons",
        ], detail_rows))
        summary_rows.append([
            CONCEPTS[m],
            sum(a.is_potential for a in items),
            sum(a.is_robust for a in items),
            sum(a.is_almost for a in items),
        ] + [sum(a.results[p].passed for a in items)
             for p in ("predictive", "cochange", "twins", "monotonicity", "length")])
        for a in items:
            matrix_rows.append([CONCEPTS[m], a.smell_name] +
                               [a.results[p].passed for p in PROPERTIES] +
                               [a.properties_held, a.verdict])
    written.append(_write_csv(out / "summary.csv", SUMMARY_COLUMNS, summary_rows))
    written.append(_write_csv(out / "property_matrix.csv",
                              ["Metric", "Smell"] + [PROPERTY_HEADERS[p] for p in PROPERTIES]
                              + ["Properties", "Verdict"], matrix_rows))

    for m, per_smell in analysis.cochange.items():
        rows = [[s, r.opportunities, r.support, r.metric_improvements, r.precision, r.lift]
                for s, r in sorted(per_smell.items())]
        written.append(_write_csv(out / f"cochange_{m}.csv",
                                  ["Smell", "Opportunities", "Smell Improvements",
                                   "Metric Improvements", "Precision", "Lift"], rows))
    if analysis.removal:
        floor = cfg.min_removal_opportunities
        rows = []
        for s, r in sorted(analysis.removal.items()):
            shown = r.probability if r.opportunities >= floor else None
            rows.append([s, analysis.smell_groups.get(s, "Unknown"), r.opportunities, r.removed, shown])
        written.append(_write_csv(out / "removal.csv",
                                  ["Smell", "Group", "Opportunities", "Removed", "Removal Probability"], rows))
        written.append(_write_csv(out / "stability.csv", ["Smell", "Pearson"],
                                  [[s, r] for s, r in sorted(analysis.stability.items())]))
    if analysis.models:
        rows = []
        for m, r in analysis.models.items():
            pl = r.per_length_group
            rows.append([CONCEPTS[m], r.clean_hit_rate, r.p_high_given_clean, r.p_low_given_clean,
                         r.smelly_hit_rate, r.n_files, r.n_clean, r.lift_high,
                         pl.get("short"), pl.get("medium"), pl.get("long")])
        written.append(_write_csv(out / "group_model.csv", GROUP_MODEL_COLUMNS + GROUP_MODEL_EXTRA, rows))
    written.append(write_run_info(out / "run.json", analysis))
    return written


def config_digest(config) -> str:
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def write_run_info(path: Path, analysis) -> Path:
    """Facts about the run that the report header needs."""
    info = {
        "battery_year": analysis.battery_year,
        "model_year": analysis.model_year,
        "config_sha256": config_digest(analysis.config),
        "length_cuts": list(analysis.length_cuts),
        "notices": list(analysis.notices),
    }
    path.write_text(json.dumps(info, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out_dir: str | Path, analysis, inputs: Mapping[str, Path], outputs: Iterable[Path]) -> Path:
    """Config, its hash, input digests and digests of ``outputs``. Contains no
    timestamps or absolute paths, so identical runs give identical bytes."""
    out = Path(out_dir)
    manifest = {
        "tool": "smellcause",
        "version": __version__,
        "config": analysis.config.to_dict(),
        "config_sha256": config_digest(analysis.config),
        "inputs": {name: sha256_file(p) for name, p in sorted(inputs.items())},
        "battery_year": analysis.battery_year,
        "model_year": analysis.model_year,
        "length_cuts": list(analysis.length_cuts),
        "notices": list(analysis.notices),
        "outputs": {Path(p).relative_to(out).as_posix(): sha256_file(Path(p)) for p in sorted(set(outputs))},
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# --- rendering from CSVs ---------------------------------------------------

def _md_table(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(row) + " |" for row in rows]
    return "\n".join(lines)


def _two(s: str) -> str:
    v = _num(s)
    return "" if v is None else f"{v:,.2f}"


def _savefig(fig, path: Path) -> Path:
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)
    return path


def plot_ccp_by_line_deciles(metrics_csv: Path, path: Path) -> Path | None:
    rows = _read_csv(metrics_csv)
    if len(rows) < 10:
        return None
    lines = np.array([float(r["lines"]) for r in rows])
    ccp = np.array([float(r["ccp"]) for r in rows])
    order = np.lexsort((ccp, lines))
    deciles = np.array_split(order, 10)
    means = [ccp[d].mean() for d in deciles]
    upper = [int(lines[d].max()) for d in deciles]
    with plt.rc_context(FIGURE_STYLE):
        fig, ax = plt.subplots()
        ax.bar(range(1, 11), means, color="0.45")
        ax.set_xticks(range(1, 11), [f"{i}\n≤{u}" for i, u in enumerate(upper, start=1)], fontsize=7)
        ax.set_xlabel("line-count decile (upper bound)")
        ax.set_ylabel("mean CCP")
        ax.set_title("Corrective commit probability by line-count decile")
        fig.tight_layout()
        return _savefig(fig, path)


def plot_property_counts(summary_csv: Path, path: Path) -> Path | None:
    rows = _read_csv(summary_csv)
    if not rows:
        return None
    cols = SUMMARY_COLUMNS[1:]
    width = 0.8 / len(rows)
    x = np.arange(len(cols))
    with plt.rc_context(FIGURE_STYLE):
        fig, ax = plt.subplots(figsize=(8, 4))
        for i, r in enumerate(rows):
            ax.bar(x + i * width, [int(r[c]) for c in cols], width, label=r["Concept"])
        ax.set_xticks(x + width * (len(rows) - 1) / 2, cols, rotation=30, ha="right")
        ax.set_ylabel("smells")
        ax.set_title("Smells with each property")
        ax.legend(frameon=False, fontsize=8)
        fig.tight_layout()
        return _savefig(fig, path)


def plot_properties_held(matrix_csv: Path, path: Path) -> Path | None:
    rows = _read_csv(matrix_csv)
    if not rows:
        return None
    by_metric: dict[str, Counter] = {}
    for r in rows:
        by_metric.setdefault(r["Metric"], Counter())[int(r["Properties"])] += 1
    with plt.rc_context(FIGURE_STYLE):
        fig, ax = plt.subplots()
        for metric, counts in by_metric.items():
            ax.plot(range(6), [counts.get(k, 0) for k in range(6)], marker="o", label=metric)
        ax.set_xlabel("properties held")
        ax.set_ylabel("smells")
        ax.set_title("Property-count sensitivity")
        ax.legend(frameon=False, fontsize=8)
        fig.tight_layout()
        return _savefig(fig, path)


def render_report(out_dir: str | Path) -> list[Path]:
    """Build ``report.md`` and ``figures/*.png`` from the CSVs in ``out_dir``.

    Returns the report path followed by the figures written.
    """
    out = Path(out_dir)
    if not (out / "summary.csv").exists():
        raise FileNotFoundError(f"{out} has no summary.csv; run 'smellcause analyze' first")
    figdir = out / "figures"
    figdir.mkdir(exist_ok=True)
    info = {}
    if (out / "run.json").exists():
        info = json.loads((out / "run.json").read_text(encoding="utf-8"))

    parts = ["# Smell causality screen", ""]
    if info:
        parts += [f"Battery year {info.get('battery_year')}, group-model year "
                  f"{info.get('model_year')}, config sha256 `{info.get('config_sha256', '')[:16]}`.", ""]
        for n in info.get("notices", []):
            parts.append(f"> {n}")
        parts.append("")

    summary = _read_csv(out / "summary.csv")
    parts += ["## Smells with each property", "",
              _md_table(SUMMARY_COLUMNS, ([r[c] for c in SUMMARY_COLUMNS] for r in summary)), ""]
    figs = [plot_property_counts(out / "summary.csv", figdir / "property_counts.png")]

    for r in summary:
        metric = next((k for k, v in CONCEPTS.items() if v == r["Concept"]), None)
        p = out / f"potential_{metric}.csv"
        if metric is None or not p.exists():
            continue
        rows = _read_csv(p)
        parts += [f"## Potential smells for {r['Concept']}", ""]
        if rows:
            parts.append(_md_table(POTENTIAL_COLUMNS, (
                [row["Smell"], row["Group"]] + [_two(row[c]) for c in POTENTIAL_COLUMNS[2:]] for row in rows)))
        else:
            parts.append("No smell has all five properties.")
        parts.append("")

    matrix = out / "property_matrix.csv"
    if matrix.exists():
        counts: dict[str, Counter] = {}
        for row in _read_csv(matrix):
            counts.setdefault(row["Metric"], Counter())[int(row["Properties"])] += 1
        parts += ["## Number of properties held", "",
                  _md_table(["Metric"] + [str(k) for k in range(5, -1, -1)],
                            ([m] + [str(c.get(k, 0)) for k in range(5, -1, -1)] for m, c in counts.items())), ""]
        figs.append(plot_properties_held(matrix, figdir / "properties_held.png"))

    removal, ccp = out / "removal.csv", out / "assessment_ccp.csv"
    if removal.exists() and ccp.exists():
        stats = {row["Smell"]: row for row in _read_csv(ccp)}
        acted = [row for row in _read_csv(removal)
                 if _num(row["Removal Probability"]) is not None
                 and _num(row["Removal Probability"]) >= ACTED_UPON_MIN_PROBABILITY]
        acted.sort(key=lambda row: (-float(row["Removal Probability"]), row["Smell"]))
        parts += ["## Acted-upon smells", ""]
        if acted:
            parts.append(_md_table(POTENTIAL_COLUMNS, (
                [row["Smell"], row["Group"]]
                + [_two(stats.get(row["Smell"], {}).get(c, "")) for c in POTENTIAL_COLUMNS[2:-1]]
                + [_two(row["Removal Probability"])] for row in acted)))
        else:
            parts.append(f"No smell reaches removal probability {ACTED_UPON_MIN_PROBABILITY} "
                         "with enough removal opportunities.")
        parts.append("")

    gm = out / "group_model.csv"
    if gm.exists():
        rows = _read_csv(gm)
        parts += ["## Files free of potential smells", "",
                  "Hit Rate is the share of files with none of the metric's potential smells.", "",
                  _md_table(GROUP_MODEL_COLUMNS + ["Short High Lift", "Medium High Lift", "Long High Lift"], (
                      [row["Metric"]] + [_two(row[c]) for c in GROUP_MODEL_COLUMNS[1:]]
                      + [_two(row[c]) for c in ("Short High Lift", "Medium High Lift", "Long High Lift")]
                      for row in rows)), ""]

    year = info.get("battery_year")
    metrics_csv = out / f"metrics_{year}.csv" if year else None
    if metrics_csv is None or not metrics_csv.exists():
        found = sorted(out.glob("metrics_*.csv"))
        metrics_csv = found[-1] if found else None
    if metrics_csv is not None:
        figs.append(plot_ccp_by_line_deciles(metrics_csv, figdir / "ccp_by_line_deciles.png"))

    parts += ["## Figures", ""]
    for f in figs:
        if f is not None:
            parts.append(f"![{f.stem}](figures/{f.name})")
    parts.append("")
    path = out / "report.md"
    path.write_text("\n".join(parts), encoding="utf-8")
    return [path] + [f for f in figs if f is not None]
