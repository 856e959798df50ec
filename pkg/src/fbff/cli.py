"""Command line front end for training, evaluation, and sweeps."""
from __future__ import annotations

import argparse
import sys

from .config import RunConfig, apply_overrides, load_config
from .harness import aggregate_quantiles, run_eval, run_sweep, run_train, \
    _write_csv

EXIT_OK = 0
EXIT_ABORTED = 3


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    return apply_overrides(cfg, args.set or [])


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config entry")
    p.add_argument("--out", default="run", help="output directory")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fbff",
        description="train and evaluate mixed feedback/feedforward policies")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one run")
    _add_common(p_train)

    p_eval = sub.add_parser("eval", help="roll out a checkpoint")
    _add_common(p_eval)
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--mode", choices=["fb", "ff", "composed"])
    p_eval.add_argument("--failure", action="store_true", default=None,
                        help="freeze position observations in the near field")

    p_sweep = sub.add_parser("sweep", help="train several seeds")
    _add_common(p_sweep)
    p_sweep.add_argument("--seeds", required=True,
                         help="comma separated seed list")
    p_sweep.add_argument("--workers", type=int, default=1)

    p_plot = sub.add_parser("plot-data",
                            help="aggregate run metrics into one table")
    p_plot.add_argument("--runs", nargs="+", required=True,
                        help="run directories holding metrics.csv")
    p_plot.add_argument("--out", required=True, help="output csv path")

    args = parser.parse_args(argv)

    if args.command == "train":
        summary = run_train(_load(args), args.out)
        print("episodes=%d success=%s median_last=%s" % (
            summary["episodes"], summary["success"],
            summary["score_last20_median"]))
        return EXIT_ABORTED if summary["aborted"] else EXIT_OK

    if args.command == "eval":
        report = run_eval(_load(args), args.checkpoint, args.out,
                          mode=args.mode, failure=args.failure)
        print("score=%s steps=%d" % (report["score"], report["steps"]))
        return EXIT_OK

    if args.command == "sweep":
        seeds = [int(s) for s in args.seeds.split(",")]
        result = run_sweep(_load(args), seeds, args.out,
                           workers=args.workers)
        part = result["partition"]
        print("success=%d/%d aborted=%s" % (
            part["success_count"], len(seeds), part["aborted_seeds"]))
        return EXIT_ABORTED if part["aborted_seeds"] else EXIT_OK

    rows = aggregate_quantiles(args.runs)
    if not rows:
        print("no metrics found", file=sys.stderr)
        return 1
    _write_csv(args.out, list(rows[0].keys()), rows)
    print("wrote %s (%d episodes)" % (args.out, len(rows)))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
