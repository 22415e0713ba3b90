"""Command-line entry point: ``smellcause {analyze,synth,classify-commits,report}``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from smellcause import __version__
from smellcause.classify import DEFAULT_CORRECTIVE_TOKENS, DEFAULT_NEGATIONS, build_rules, classify_commit
from smellcause.ingest import GENERIC_CSV, CHECKSTYLE_XML, IngestError, load_commits
from smellcause.metrics import GroupingError
from smellcause.pipeline import ConfigError, RunConfig, analyze_corpus, load_config, load_inputs, make_config
from smellcause.report import render_report, write_bundle, write_manifest
from smellcause.synth import CorpusSpec, SynthSpecError, generate, spec_from_dict, spec_to_dict, write_corpus

log = logging.getLogger("smellcause")


def run(config: RunConfig) -> int:
    """Load inputs, analyze, and write the full report bundle to ``config.out``."""
    commits, snapshots, inputs = load_inputs(config)
    analysis = analyze_corpus(commits, snapshots, config)
    out = Path(config.out)
    written = write_bundle(analysis, out)
    written += render_report(out)
    write_manifest(out, analysis, inputs, written)
    for notice in analysis.notices:
        log.warning("%s", notice)
    return 0


def _csv_list(s: str | None) -> list[str] | None:
    if s is None:
        return None
    return [x.strip() for x in s.split(",") if x.strip()]


def cmd_analyze(args) -> int:
    overrides = {
        "years": [int(y) for y in _csv_list(args.years)] if args.years else None,
        "metrics": _csv_list(args.metrics),
        "min_commits": args.min_commits,
        "min_files": args.min_files,
        "seed": args.seed,
        "model_year": args.model_year,
    }
    if args.config:
        config = load_config(args.config, overrides)
    else:
        config = make_config({k: v for k, v in overrides.items() if v is not None})
    if args.out:
        config = dataclasses.replace(config, out=args.out)
    return run(config)


def cmd_synth(args) -> int:
    if args.spec:
        spec = spec_from_dict(json.loads(Path(args.spec).read_text()))
    else:
        spec = CorpusSpec()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.n_repos is not None:
        changes["n_repos"] = args.n_repos
    if args.files_per_repo is not None:
        changes["files_per_repo"] = args.files_per_repo
    if args.years:
        changes["years"] = tuple(int(y) for y in _csv_list(args.years))
    if changes:
        spec = spec_from_dict(dict(spec_to_dict(spec), **changes))
    corpus = generate(spec)
    out = write_corpus(corpus, args.out, args.format)
    print(f"wrote {len(corpus.commits)} commits over {len(corpus.snapshots)} snapshots to {out}")
    return 0


def cmd_classify(args) -> int:
    tokens, negations = DEFAULT_CORRECTIVE_TOKENS, DEFAULT_NEGATIONS
    if args.config:
        cfg = load_config(args.config)
        tokens, negations = cfg.corrective_tokens, cfg.negation_patterns
    rules = build_rules(tokens, negations)
    with open(args.commits, encoding="utf-8") as fh:
        commits = load_commits(fh)
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    n_fix = 0
    try:
        for c in commits:
            fix = classify_commit(c.message, rules)
            n_fix += fix
            out.write(json.dumps({"repo": c.repo_id, "sha": c.commit_id, "corrective": fix}, sort_keys=True) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    print(f"{n_fix} of {len(commits)} commits corrective", file=sys.stderr)
    return 0


def cmd_report(args) -> int:
    print(render_report(args.out)[0])
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="smellcause", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="run the full screen and write the report bundle")
    a.add_argument("--config", help="flat TOML config file")
    a.add_argument("--years", help="comma-separated years, e.g. 2017,2018,2019")
    a.add_argument("--min-commits", type=int)
    a.add_argument("--min-files", type=int)
    a.add_argument("--seed", type=int)
    a.add_argument("--model-year", type=int)
    a.add_argument("--out", help="output directory")
    a.add_argument("--metrics", help="subset of ccp,coupling,duration,detection,random")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("synth", help="generate a synthetic corpus with known ground truth")
    s.add_argument("--out", required=True)
    s.add_argument("--spec", help="JSON corpus spec")
    s.add_argument("--seed", type=int)
    s.add_argument("--n-repos", type=int)
    s.add_argument("--files-per-repo", type=int)
    s.add_argument("--years")
    s.add_argument("--format", choices=[GENERIC_CSV, CHECKSTYLE_XML], default=GENERIC_CSV)
    s.set_defaults(func=cmd_synth)

    c = sub.add_parser("classify-commits", help="label commits as corrective or not")
    c.add_argument("commits", help="line-delimited JSON commit stream")
    c.add_argument("--config", help="config file with corrective_tokens / negation_patterns")
    c.add_argument("--output", help="write labels here instead of stdout")
    c.set_defaults(func=cmd_classify)

    r = sub.add_parser("report", help="rebuild report.md and figures from a bundle's CSVs")
    r.add_argument("--out", required=True, help="bundle directory")
    r.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, IngestError, GroupingError, SynthSpecError, FileNotFoundError) as exc:
        print(f"smellcause: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
