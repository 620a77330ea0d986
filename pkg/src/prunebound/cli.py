"""Command-line entry point.

    prunebound {train|prune|sketch|bounds|verify|report}
               --config <path> [--seed N] [--out DIR] [--method LIST] [--limit N]

Exit codes: 0 success, 1 validation error (bad config, missing files,
malformed inputs), 2 numerical failure (divergence, non-convergence,
infeasible budgets, failed verification).
"""

from __future__ import annotations

import argparse
import sys

from . import pipeline
from .config import apply_overrides, load_config
from .errors import NumericalFailure, PruneboundError, ValidationFailure


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are validation errors
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="prunebound",
                     description="pruning, sketching, and generalization-bound pipeline")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("train", "prune", "sketch", "bounds", "verify", "report"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override master seed")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("--limit", type=int, default=None,
                       help="override training-set size limit")
        if name == "bounds":
            p.add_argument("--method", default=None,
                           help="comma-separated subset of methods to emit")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = apply_overrides(cfg, seed=args.seed, out_dir=args.out, limit=args.limit)

        if args.command == "train":
            artifacts = pipeline.stage_train(cfg)
        elif args.command == "prune":
            artifacts = pipeline.stage_prune(cfg)
        elif args.command == "sketch":
            artifacts = pipeline.stage_sketch(cfg)
        elif args.command == "bounds":
            methods = args.method.split(",") if args.method else None
            artifacts = pipeline.stage_bounds(cfg, methods=methods)
        elif args.command == "report":
            artifacts = pipeline.stage_report(cfg)
        else:  # verify
            results, ok = pipeline.stage_verify(cfg)
            for res in results:
                print(res.line())
            print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
            return 0 if ok else 2

        for kind, path in artifacts.items():
            print(f"{kind}: {path}")
        return 0
    except ValidationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except PruneboundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
