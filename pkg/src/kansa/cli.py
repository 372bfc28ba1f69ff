"""Command line entry points.

    kansa run <config.json> [--out DIR] [--jobs N] [--fit-drop-last K]
              [--weight-convention squared|linear] [--no-figures]
    kansa run --preset <name> [...]
    kansa preset <name> --print

``run`` writes study.csv, summary.txt and the convergence figures into the
output directory and prints the summary; the exit code is 0 iff every cell
solved.  ``preset`` prints a canned config as JSON for editing.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from .experiment import (
    PRESET_NAMES,
    ConfigError,
    ExperimentConfig,
    preset,
    run_experiment,
    summarize,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kansa",
        description="Meshfree kernel collocation convergence studies",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a convergence sweep")
    run_p.add_argument("config", nargs="?", help="path to a JSON config file")
    run_p.add_argument("--preset", choices=PRESET_NAMES, help="use a canned config")
    run_p.add_argument("--out", help="output directory (overrides config)")
    run_p.add_argument("--jobs", type=int, help="parallel refinement levels")
    run_p.add_argument(
        "--fit-drop-last",
        type=int,
        metavar="K",
        help="exclude the K finest levels from rate fits",
    )
    run_p.add_argument(
        "--weight-convention",
        choices=("squared", "linear"),
        help="W multiplies the squared residual (default) or the stacked block",
    )
    run_p.add_argument("--rcond", type=float, help="SVD truncation threshold")
    run_p.add_argument(
        "--no-figures", action="store_true", help="skip figure rendering"
    )

    preset_p = sub.add_parser("preset", help="show a canned config")
    preset_p.add_argument("name", choices=PRESET_NAMES)
    preset_p.add_argument(
        "--print", action="store_true", dest="print_json",
        help="print the config as JSON (default behavior)",
    )
    return parser


def _load_config(args) -> ExperimentConfig:
    if (args.config is None) == (args.preset is None):
        raise ConfigError("provide exactly one of: a config file or --preset")
    config = (
        preset(args.preset)
        if args.preset
        else ExperimentConfig.from_json_file(args.config)
    )
    overrides = {}
    if args.out is not None:
        overrides["out"] = args.out
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.fit_drop_last is not None:
        overrides["fit_drop_last"] = args.fit_drop_last
    if args.weight_convention is not None:
        overrides["weight_convention"] = args.weight_convention
    if args.rcond is not None:
        overrides["rcond"] = args.rcond
    return replace(config, **overrides) if overrides else config


def _run(args) -> int:
    config = _load_config(args)
    config.validate()
    study = run_experiment(config)

    out_dir = Path(config.out or "results")
    out_dir.mkdir(parents=True, exist_ok=True)
    timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    study.to_csv(out_dir / "study.csv", timestamp=timestamp)
    summary = summarize(study, config)
    (out_dir / "summary.txt").write_text(summary)
    print(summary, end="")
    if not args.no_figures:
        from .plots import render_study_figures

        for path in render_study_figures(study, out_dir):
            print(f"wrote {path}")
    print(f"wrote {out_dir / 'study.csv'}")
    return 0 if study.all_solved else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "preset":
            print(preset(args.name).to_json())
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
