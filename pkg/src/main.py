"""
krylovlab command-line interface.

    krylovlab run --suite <file> --out <dir> [--parallelism N] [--filter <glob>]
    krylovlab demo [--out <dir>] [--parallelism N]
    krylovlab validate --suite <file>

Exit code 0 iff no check failed, 1 if any failed, 2 for an invalid suite.
"""
import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src import __version__
from src.errors import ParseError, ValidationError
from src.harness import filter_specs, load_suite, parse_suite, run_suite
from src.utils.formatters import format_summary

# Configuration from environment variables, with defaults
LOG_LEVEL = os.environ.get("KRYLOVLAB_LOG_LEVEL", "WARNING")
PARALLELISM = int(os.environ.get("KRYLOVLAB_PARALLELISM", "1"))
OUT_DIR = os.environ.get("KRYLOVLAB_OUT_DIR", "krylovlab-out")

logger = logging.getLogger("krylovlab")

EXIT_OK = 0
EXIT_FAILURES = 1
EXIT_INVALID = 2

DEMO_SUITE: Dict[str, Any] = {
    "experiments": [
        {
            "name": "solvability-power-decay",
            "operator": {
                "family": {"kind": "power_decay", "alpha": 1.0},
                "count": 29,
                "kernel_dim": 3,
                "conjugation": {"kind": "haar_unitary"},
                "seed": 1,
            },
            "datum": {"kind": "random", "in_range": True},
            "checks": ["solution", "minimal_norm", "uniqueness"],
            "repetitions": 2,
        },
        {
            "name": "structure-annulus",
            "operator": {
                "family": {"kind": "random_annulus", "r_min": 0.2, "r_max": 1.0},
                "count": 23,
                "kernel_dim": 1,
                "conjugation": {"kind": "haar_unitary"},
                "seed": 2,
            },
            "datum": {"kind": "random"},
            "checks": ["structure", "reducibility"],
        },
        {
            "name": "projection-two-cluster",
            "operator": {
                "family": {"kind": "two_cluster", "cluster_radius": 0.1},
                "count": 8,
                "conjugation": {"kind": "haar_unitary"},
                "seed": 3,
            },
            "datum": {"kind": "random"},
            "split": {"kind": "half_plane"},
            "checks": ["projection_quadrature", "indicator_polynomial"],
        },
        {
            "name": "cyclicity-proof-vector",
            "operator": {
                "family": {"kind": "power_decay", "alpha": 1.0},
                "count": 15,
                "kernel_dim": 1,
                "seed": 4,
            },
            "datum": {"kind": "cyclic_proof_vector"},
            "checks": ["cyclicity"],
        },
        {
            "name": "measure-isometry",
            "operator": {
                "family": {"kind": "random_annulus", "r_min": 0.3, "r_max": 1.0},
                "count": 15,
                "kernel_dim": 1,
                "conjugation": {"kind": "haar_unitary"},
                "seed": 5,
            },
            "datum": {"kind": "random", "in_range": False},
            "checks": ["measure", "isometry", "converse"],
            "params": {"poly_samples": 20},
        },
    ]
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="krylovlab", description="Krylov solvability lab for compact normal operators")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", help="run a suite file")
    run.add_argument("--suite", required=True, help="JSON suite file")
    run.add_argument("--out", default=OUT_DIR, help="output directory (default: %(default)s)")
    run.add_argument("--parallelism", type=int, default=PARALLELISM, help="concurrent experiments")
    run.add_argument("--filter", default=None, help="only experiments whose name matches this glob")

    demo = subparsers.add_parser("demo", help="run the built-in showcase suite")
    demo.add_argument("--out", default=OUT_DIR, help="output directory (default: %(default)s)")
    demo.add_argument("--parallelism", type=int, default=PARALLELISM, help="concurrent experiments")

    validate = subparsers.add_parser("validate", help="parse and validate a suite file")
    validate.add_argument("--suite", required=True, help="JSON suite file")
    return parser


def _describe_invalid(error: Exception) -> str:
    if isinstance(error, ParseError) and error.line is not None:
        return f"parse error at line {error.line}, column {error.column}: {error}"
    if isinstance(error, ValidationError) and error.field:
        return f"invalid suite ({error.field}): {error}"
    return f"invalid suite: {error}"


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=LOG_LEVEL.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        if args.command == "demo":
            specs = parse_suite(DEMO_SUITE)
        else:
            specs = load_suite(args.suite)
    except (ParseError, ValidationError) as e:
        logger.debug("suite rejected: %r", e)
        print(_describe_invalid(e), file=sys.stderr)
        return EXIT_INVALID

    if args.command == "validate":
        print(f"{args.suite}: {len(specs)} experiment(s) OK")
        return EXIT_OK

    if args.command == "run" and args.filter:
        specs = filter_specs(specs, args.filter)
        logger.info("%d experiment(s) match filter %r", len(specs), args.filter)
    try:
        summary = run_suite(specs, parallelism=args.parallelism, out_dir=args.out)
    except ValueError as e:
        print(f"Error running suite: {e}", file=sys.stderr)
        return EXIT_INVALID

    counts = summary.counts
    if args.command == "demo":
        print(format_summary(counts, [r.to_dict() for r in summary.records]))
    else:
        print(f"pass: {counts['pass']}  warn: {counts['warn']}  fail: {counts['fail']}  ({summary.out_dir})")
    return EXIT_OK if summary.ok else EXIT_FAILURES


if __name__ == "__main__":
    sys.exit(main())
