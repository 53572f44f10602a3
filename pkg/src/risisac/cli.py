"""``isac`` command line entry point."""

from __future__ import annotations

import argparse
import sys

from .baselines import MODES, SCHEMES
from .config import SystemConfig, load_config
from .experiment import SWEEPS, TRACE_SWEEPS, ExperimentSpec, run_experiment


def _number_list(text):
    return [float(x) for x in text.replace(" ", "").split(",") if x]


def _name_list(text):
    return [x for x in text.replace(" ", "").split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isac", description="RIS-assisted ISAC beamforming simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a Monte-Carlo sweep and write CSV")
    run.add_argument("--config", help="key = value scenario file (defaults if omitted)")
    run.add_argument("--mode", choices=MODES, required=True)
    run.add_argument("--sweep", choices=list(SWEEPS) + list(TRACE_SWEEPS), required=True)
    run.add_argument("--values", type=_number_list, default=[], help="comma-separated, strictly increasing")
    run.add_argument("--trials", type=int, default=1)
    run.add_argument("--schemes", type=_name_list, default=["proposed"], help=f"subset of {','.join(SCHEMES)}")
    run.add_argument("--seed", type=int, default=0, help="trial t uses seed + t")
    run.add_argument("--out", required=True)
    run.add_argument("--raw", action="store_true", help="also write per-trial rows to <out>_raw.csv")
    run.add_argument("--no-timing", action="store_true", help="write zero wall times for reproducible files")
    run.add_argument("--workers", type=int, default=1, help="parallel trial processes")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        base = load_config(args.config) if args.config else SystemConfig()
        spec = ExperimentSpec(
            mode=args.mode,
            sweep=args.sweep,
            values=args.values,
            trials=args.trials,
            schemes=args.schemes,
            out=args.out,
            seed_base=args.seed,
            base=base,
            raw=args.raw,
            timing=not args.no_timing,
            workers=args.workers,
        )
    except (OSError, ValueError) as err:
        print(f"isac: error: {err}", file=sys.stderr)
        return 2
    results = run_experiment(spec)
    infeasible = sum(r.status == "infeasible" for r in results)
    print(f"wrote {spec.out} ({len(results)} runs, {infeasible} infeasible)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
