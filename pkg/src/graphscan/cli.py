"""Command-line front end: load, cluster, optionally verify, emit results.

Exit codes: 0 success; 1 input or parameter errors (including malformed
graph files and bad flag values); 2 verification mismatch against the
serial reference (--verify); 3 infeasible out-of-core budget.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from typing import Optional

from .graph import build_graph, is_graph_cache, load_graph, parse_edge_list
from .oracle import results_equivalent, serial_scan
from .partition import (
    GraphMeta,
    InfeasibleBudgetError,
    partition_graph,
    scan_out_of_core,
)
from .scan import scan_in_memory


@dataclass
class RunConfig:
    """One clustering run, as configured from the command line."""

    input_path: str
    epsilon: str
    mu: int
    mode: str = "inmem"
    budget_bytes: Optional[int] = None
    workers: int = 1
    deterministic: bool = False
    verify: bool = False
    output_path: Optional[str] = None
    stats_path: Optional[str] = None
    spill_dir: Optional[str] = None


class _Parser(argparse.ArgumentParser):
    """Argument errors are input errors: exit 1, not argparse's 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="graphscan",
        description=(
            "Structural graph clustering: cores, clusters, hubs, outliers."
        ),
    )
    parser.add_argument("--input", required=True, help="edge list file or binary graph cache")
    parser.add_argument(
        "--epsilon",
        required=True,
        help="similarity threshold in (0, 1]; decimal string, applied exactly",
    )
    parser.add_argument("--mu", required=True, type=int, help="core threshold (>= 2)")
    parser.add_argument(
        "--mode",
        choices=("inmem", "outofcore"),
        default="inmem",
        help="in-memory engine or budgeted out-of-core engine",
    )
    parser.add_argument(
        "--budget",
        type=int,
        default=None,
        help="out-of-core memory budget in bytes (required for --mode outofcore)",
    )
    parser.add_argument("--workers", type=int, default=1, help="worker threads (>= 1)")
    parser.add_argument(
        "--deterministic",
        action="store_true",
        help="single-worker fixed schedule; byte-identical output across runs",
    )
    parser.add_argument(
        "--verify",
        action="store_true",
        help="compare against the brute-force serial reference; mismatch exits 2",
    )
    parser.add_argument("--output", default=None, help="result file (default: stdout)")
    parser.add_argument("--stats", default=None, help="write run statistics to this file")
    parser.add_argument(
        "--spill-dir",
        default=None,
        help="directory for out-of-core partition files (default: temp dir)",
    )
    return parser


def config_from_args(argv: Optional[list[str]] = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    return RunConfig(
        input_path=args.input,
        epsilon=args.epsilon,
        mu=args.mu,
        mode=args.mode,
        budget_bytes=args.budget,
        workers=args.workers,
        deterministic=args.deterministic,
        verify=args.verify,
        output_path=args.output,
        stats_path=args.stats,
        spill_dir=args.spill_dir,
    )


def _load_input(path: str):
    if is_graph_cache(path):
        return load_graph(path)
    with open(path, "rb") as f:
        return build_graph(parse_edge_list(f))


def run(cfg: RunConfig) -> int:
    workers = 1 if cfg.deterministic else cfg.workers
    try:
        if workers < 1:
            raise ValueError(f"workers must be >= 1, got {cfg.workers}")
        if cfg.mode == "outofcore" and cfg.budget_bytes is None:
            raise ValueError("--mode outofcore requires --budget")
        g = _load_input(cfg.input_path)
        if cfg.mode == "outofcore":
            plan = partition_graph(g, cfg.budget_bytes, spill_dir=cfg.spill_dir)
            meta = GraphMeta.from_graph(g)
            result, stats = scan_out_of_core(
                meta, plan, cfg.mu, cfg.epsilon, workers=workers
            )
        else:
            result, stats = scan_in_memory(g, cfg.mu, cfg.epsilon, workers=workers)
    except InfeasibleBudgetError as exc:
        print(f"graphscan: infeasible budget: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"graphscan: error: {exc}", file=sys.stderr)
        return 1

    if cfg.verify:
        oracle = serial_scan(g, cfg.mu, cfg.epsilon)
        report = results_equivalent(result, oracle)
        if not report:
            print(f"graphscan: verification failed: {report.detail}", file=sys.stderr)
            return 2

    if cfg.output_path is not None:
        result.write(cfg.output_path)
    else:
        sys.stdout.write(result.to_text())
    if cfg.stats_path is not None:
        stats.write(cfg.stats_path)
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    return run(config_from_args(argv))


if __name__ == "__main__":
    raise SystemExit(main())
