"""Command line interface.

Subcommands: `run` executes a config at its base point, `sweep` executes
every sweep value, `validate` checks a config without running anything,
and `bounds` turns a summary file into bound-overlay tables and figures.
Exit codes: 0 all work completed, 1 validation failure, 2 internal error.
"""
from __future__ import annotations

import argparse
import sys
import traceback
from pathlib import Path

from .harness import ConfigError, build_experiment, load_config, run_experiment
from .report import load_summaries, write_overlay


def _add_run_flags(parser):
    parser.add_argument("config", help="YAML experiment config")
    parser.add_argument("--seed", type=int, default=None,
                        help="run a single seed instead of the configured list")
    parser.add_argument("--out-dir", default=None,
                        help="output directory (default: config output.dir or ./out)")
    parser.add_argument("--threads", type=int, default=1,
                        help="concurrent runs; never changes the outputs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustgd",
        description="Simulator for robust distributed SGD/GD under worker "
                    "corruption and data poisoning, with executable bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute the config (ignores any sweep axis)")
    _add_run_flags(run_p)

    sweep_p = sub.add_parser("sweep", help="execute every sweep value of the config")
    _add_run_flags(sweep_p)

    val_p = sub.add_parser("validate", help="validate a config without running it")
    val_p.add_argument("config")

    bounds_p = sub.add_parser(
        "bounds", help="emit bound-overlay tables and figures for a summary file")
    bounds_p.add_argument("summary", help="summary.jsonl produced by run/sweep")
    bounds_p.add_argument("--out-dir", default=None,
                          help="where to write overlays (default: <summary dir>/reports)")
    bounds_p.add_argument("--t-step", type=int, default=1,
                          help="emit every t-step-th iteration")
    bounds_p.add_argument("--no-plot", action="store_true",
                          help="skip the figure, write only the table")
    return parser


def _cmd_run(args, use_sweep: bool) -> int:
    summaries = run_experiment(args.config, out_dir=args.out_dir,
                               threads=max(1, args.threads),
                               seed_override=args.seed, use_sweep=use_sweep)
    for record in summaries:
        tag = ""
        if record["sweep_param"] is not None:
            tag = f" [{record['sweep_param']}={record['sweep_value']}]"
        mean = record["mean_final_gap"]
        mean_txt = "n/a" if mean is None else f"{mean:.6g}"
        print(f"{record['name']}{tag}: seeds={len(record['seeds'])} "
              f"mean_gap={mean_txt} bound={record['bound']:.6g} "
              f"floor={record['floor']:.6g} diverged={len(record['diverged'])}")
    return 0


def _cmd_validate(args) -> int:
    raw = load_config(args.config)
    points = build_experiment(raw, name=raw.get("name", Path(args.config).stem))
    print(f"ok: {len(points)} sweep point(s), "
          f"{sum(len(p.seeds) for p in points)} run(s)")
    return 0


def _cmd_bounds(args) -> int:
    summary_path = Path(args.summary)
    out_dir = args.out_dir or summary_path.parent / "reports"
    written = []
    for record in load_summaries(summary_path):
        written.extend(write_overlay(record, summary_path.parent, out_dir,
                                     t_step=max(1, args.t_step),
                                     plot=not args.no_plot))
    for path in written:
        print(path)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args, use_sweep=False)
        if args.command == "sweep":
            return _cmd_run(args, use_sweep=True)
        if args.command == "validate":
            return _cmd_validate(args)
        return _cmd_bounds(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
