"""Command line front end for batch figure rendering."""
from __future__ import annotations

import argparse
import sys

from .figures import plot_learning_curves, plot_stiffness_trace


def _interval(text: str) -> tuple[float, float]:
    try:
        lo, hi = text.split(":")
        return float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(
            "expected START:END, got %r" % text) from None


def _source(text: str) -> tuple[str, str]:
    """label=path, or a bare path labeled by itself."""
    if "=" in text:
        label, path = text.split("=", 1)
        return label, path
    return text, text


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="plotviz",
        description="render figures from experiment harness CSV outputs")
    sub = parser.add_subparsers(dest="command", required=True)

    p_curves = sub.add_parser("curves", help="learning and decomposition "
                                             "curves with quantile bands")
    p_curves.add_argument("--runs", nargs="+", required=True,
                          help="run directories holding metrics.csv")
    p_curves.add_argument("--out", required=True, help="output directory")
    p_curves.add_argument("--window", type=int, default=1,
                          help="moving-average window (1 = none)")
    p_curves.add_argument("--partition",
                          help="name=label file overriding run labels")

    p_stiff = sub.add_parser("stiffness", help="stacked raw stiffness traces")
    p_stiff.add_argument("--runs", nargs="+", required=True, type=_source,
                         help="trajectory csv / eval dir, or label=path")
    p_stiff.add_argument("--out", required=True, help="output png path")
    p_stiff.add_argument("--failure-interval", type=_interval,
                         help="shaded step interval START:END")

    args = parser.parse_args(argv)
    try:
        if args.command == "curves":
            paths = plot_learning_curves(args.runs, args.out,
                                         window=args.window,
                                         partition=args.partition)
            print("wrote %s, %s and %d table(s)" % (
                paths["curves"], paths["decomposition"],
                len(paths["tables"])))
        else:
            out = plot_stiffness_trace(args.runs, args.out,
                                       failure_interval=args.failure_interval)
            print("wrote %s" % out)
    except (OSError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
