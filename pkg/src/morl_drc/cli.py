"""Command line: ``morl-drc run|sweep|report``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import OUTPUT_ENV_VAR, PRESETS, ConfigError, load_config
from .experiment import emit_report, run_experiment, run_sweep


def _out_dir(args, cfg) -> Path:
    if args.out:
        return Path(args.out)
    return Path(cfg.output_dir) / cfg.name


def _load(args):
    overrides = dict(kv.split("=", 1) for kv in args.set or ())
    if args.seed is not None:
        overrides["run.seeds"] = ",".join(str(s) for s in args.seed)
    return load_config(args.config, preset=args.preset, overrides=overrides)


def cmd_run(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    artifact = run_experiment(cfg, out, resume=args.resume, workers=args.workers)
    print(artifact.summary_csv(), end="")
    print(f"wrote {out}", file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    results = run_sweep(cfg, args.wp, out, workers=args.workers)
    for w_p, artifact in results.items():
        print(f"# w_p = {w_p:g}")
        print(artifact.summary_csv(), end="")
    return 0


def cmd_report(args) -> int:
    paths = emit_report(args.artifact)
    print(paths["table"], end="")
    print(f"plot script: {paths['plot_script']}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="morl-drc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p):
        p.add_argument("config", nargs="?", help="INI config file (optional)")
        p.add_argument("--preset", choices=sorted(PRESETS))
        p.add_argument("--seed", type=int, action="append", help="repeat for several seeds")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
        p.add_argument("--out", help=f"output directory (default: ${OUTPUT_ENV_VAR} or ./runs, plus the scenario name)")
        p.add_argument("--workers", type=int, default=1, help="seeds run in parallel")

    run = sub.add_parser("run", help="run one scenario")
    scenario_args(run)
    run.add_argument("--resume", action="store_true", help="continue from checkpoints in --out")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="run one scenario per energy weight")
    scenario_args(sweep)
    sweep.add_argument("--wp", type=float, nargs="+", required=True)
    sweep.set_defaults(func=cmd_sweep)

    report = sub.add_parser("report", help="emit plot script and summary for a run directory")
    report.add_argument("artifact")
    report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}; rerun with --resume to continue", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
