"""Command line front end: ``blockgraph --input g.txt --algorithm kcore ...``.

Runs the partitioning phase and the update phase ``--repeats`` times and
writes one CSV row per run. ``BLADYG_LOG`` sets the log level
(``DEBUG``, ``INFO``, ``WARNING``...).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Sequence

from .bench import BenchConfig, run_bench, summarize, write_csv
from .graph import GraphError
from .partitioning import DFEPParams
from .runtime import HookFailure

log = logging.getLogger("blockgraph")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blockgraph", description="Block-centric processing of dynamic graphs.")
    p.add_argument("--input", required=True, help="edge list file")
    p.add_argument("--updates", help="update stream file (with --scenario file)")
    p.add_argument("--algorithm", choices=["degree", "kcore", "mce", "partition"], default="degree")
    p.add_argument("--partitioner", choices=["hash", "random", "dfep"], default="hash")
    p.add_argument("--workers", type=int, default=4, help="number of workers K")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strategy", choices=["incremental", "naive"], default="incremental")
    p.add_argument(
        "--scenario",
        choices=["inter", "intra", "file", "holdout"],
        default=None,
        help="update scenario; holdout re-inserts a held-out share of the edges",
    )
    p.add_argument("--scenario-size", type=int, default=1000, help="edges inserted by inter/intra scenarios")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--metrics", help="CSV file to append to (stdout if omitted)")
    p.add_argument("--snapshot", help="directory for the first run's snapshot")
    p.add_argument("--deterministic", action="store_true", help="single-threaded deterministic scheduler")
    p.add_argument("--tau", type=float, default=1.5, help="repartitioning trigger")
    p.add_argument("--alpha", type=float, default=1.0, help="locality weight of the update score")
    p.add_argument("--beta", type=float, default=1.0, help="balance weight of the update score")
    p.add_argument("--holdout", type=float, default=0.1, help="share of edges held out by the holdout scenario")
    return p


def config_from_args(args: argparse.Namespace, parser: argparse.ArgumentParser) -> BenchConfig:
    scenario = args.scenario
    if scenario is None:
        scenario = "file" if args.updates else ("holdout" if args.algorithm == "partition" else "inter")
    if scenario == "file" and not args.updates:
        parser.error("--scenario file needs --updates")
    if not 0 <= args.holdout < 1:
        parser.error("--holdout must be in [0, 1)")
    for flag in ("workers", "repeats"):
        if getattr(args, flag) < 1:
            parser.error(f"--{flag} must be >= 1")
    if args.scenario_size < 0:
        parser.error("--scenario-size must be >= 0")
    if args.tau <= 0:
        parser.error("--tau must be positive")
    return BenchConfig(
        input=args.input,
        algorithm=args.algorithm,
        partitioner=args.partitioner,
        workers=args.workers,
        seed=args.seed,
        strategy=args.strategy,
        scenario=scenario,
        scenario_size=args.scenario_size,
        updates=args.updates,
        repeats=args.repeats,
        scheduler="deterministic" if args.deterministic else "threaded",
        snapshot=args.snapshot,
        tau=args.tau,
        alpha=args.alpha,
        beta=args.beta,
        holdout=args.holdout,
        params=DFEPParams(),
    )


def configure_logging() -> None:
    level = os.environ.get("BLADYG_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv: Sequence[str] | None = None) -> int:
    configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = config_from_args(args, parser)
    try:
        records = run_bench(cfg)
    except (OSError, ValueError, RuntimeError, AssertionError, GraphError, HookFailure) as err:
        print(f"blockgraph: error: {err}", file=sys.stderr)
        return 1
    write_csv(records, args.metrics, stream=sys.stdout)
    s = summarize(records)
    parts = [f"{k}={v:.3f}" for k, v in s.items() if v is not None]
    print(f"# mean over {len(records)} run(s): " + " ".join(parts), file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
