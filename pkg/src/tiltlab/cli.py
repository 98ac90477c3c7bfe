"""Command-line entry point.

Verbs:
  run       execute the experiment named in the config and write reports
  validate  parse and validate the config, then exit
  sweep     run a counterexample sweep config (kind search_counterexample)

Flags: --config <path>, --seed <int>, --out <dir>, --override key=value
(repeatable), --jobs <int>.  Exit status: 0 clean, 2 when the verdict is
multiple-found or the sweep emitted candidates, 1 on any error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .configfile import (
    ExperimentConfig,
    apply_overrides,
    build_experiment,
    parse_document,
)
from .errors import ConfigError
from .reporting import RunOutcome, error_outcome, run_experiment


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tiltlab",
        description="minimax fixed-point laboratory for tilted displacement objectives",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("run", "validate", "sweep"):
        p = sub.add_parser(verb)
        p.add_argument("--config", required=True, help="experiment config path")
        p.add_argument("--seed", type=int, default=None, help="override the seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument(
            "--override",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config key (repeatable)",
        )
        p.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    return parser


def _load_config(args) -> ExperimentConfig:
    text = Path(args.config).read_text()
    doc = parse_document(text)
    doc = apply_overrides(doc, args.override)
    if args.seed is not None:
        doc["seed"] = str(args.seed)
    if args.out is not None:
        doc["out"] = args.out
    return build_experiment(doc)


def _write_outcome(cfg: ExperimentConfig, outcome: RunOutcome) -> Path:
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "report.txt"
    report_path.write_text(
        "".join(f"{k} = {v}\n" for k, v in outcome.report.items())
    )
    for table in outcome.tables:
        (out_dir / f"{table.name}.tsv").write_text(table.render())
    return report_path


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.verb == "validate":
        print("ok")
        return 0
    if args.verb == "sweep" and cfg.kind != "search_counterexample":
        print(
            "error: the sweep verb needs kind = search_counterexample",
            file=sys.stderr,
        )
        return 1

    try:
        outcome = run_experiment(cfg, jobs=args.jobs)
    except Exception as exc:  # runtime failure: partial report, exit 1
        outcome = error_outcome(cfg, exc)
        path = _write_outcome(cfg, outcome)
        print(f"error: {exc} (partial report at {path})", file=sys.stderr)
        return 1
    path = _write_outcome(cfg, outcome)
    print(f"report written to {path}")
    return outcome.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
