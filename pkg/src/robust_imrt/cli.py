"""Command-line front end: ``robust-imrt {phantom,optimize,compare,dvh}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import planner
from .config import ALGORITHM_NAMES, load_config
from .errors import DimensionMismatch, FileFormat, ParseError, PlanningError, SchemaError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

log = logging.getLogger("robust_imrt")


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robust-imrt",
        description="Motion-robust fluence-map planning with bio-inspired optimizers.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, type=Path, help="YAML planner configuration")
        p.add_argument("--seed", type=_u64, help="override optimizer.seed")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default ./out)")
        return p

    common(sub.add_parser("phantom", help="write the phantom label CSV"))
    opt = common(sub.add_parser("optimize", help="optimize one plan and write its artifacts"))
    opt.add_argument("--algorithm", choices=ALGORITHM_NAMES, help="override optimizer.algorithm")
    common(sub.add_parser("compare", help="run all three optimizers and write the comparison table"))
    dvh = common(sub.add_parser("dvh", help="nominal-PDF DVH of a saved weights file"))
    dvh.add_argument("--weights", required=True, type=Path, help="weights CSV (beamlet_index,weight)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = load_config(args.config)
        cfg = cfg.with_overrides(algorithm=getattr(args, "algorithm", None), seed=args.seed)
    except (ParseError, SchemaError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "phantom":
            print(planner.run_phantom(cfg, args.out))
        elif args.command == "optimize":
            report = planner.run_optimize(cfg, args.out)
            print(f"{report.algorithm}: fitness {report.best_fitness:.6g}, "
                  f"{report.evaluations} evaluations, {report.wall_clock_s:.2f} s", file=sys.stderr)
        elif args.command == "compare":
            reports = planner.run_compare(cfg, args.out)
            for name, report in reports.items():
                print(f"{name}: fitness {report.best_fitness:.6g}, {report.wall_clock_s:.2f} s", file=sys.stderr)
        elif args.command == "dvh":
            print(planner.run_dvh(cfg, args.weights, args.out))
    except (FileFormat, DimensionMismatch) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PlanningError, FloatingPointError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
