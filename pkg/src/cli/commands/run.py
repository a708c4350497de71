"""
``ptpsim run``: one simulation at the scenario's configured load.
"""

import argparse
import sys

from monitoring.prometheus_metrics import write_metrics
from src.cli.commands import EXIT_OK, EXIT_RUN_FAILED, ensure_output_dir
from src.core.config import resolve_output_dir
from src.core.logging_config import get_logger
from src.services.scenario_service import load_scenario
from src.services.sweep_service import run_single

logger = get_logger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("run", help="Run one simulation and write its statistics")
    parser.add_argument("--config", required=True, help="Scenario YAML file")
    parser.add_argument("--seed", type=int, default=None, help="Root seed (default: the scenario's seed)")
    parser.add_argument("--out", default=None, help="Output directory (default: $PTPSIM_OUTPUT_DIR or results)")
    parser.add_argument("--metrics-file", default=None, help="Write Prometheus metrics here at exit")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    cfg = load_scenario(args.config)
    out_dir = ensure_output_dir(resolve_output_dir(args.out))

    outcome = run_single(cfg, out_dir, seed=args.seed)
    if args.metrics_file:
        write_metrics(args.metrics_file)

    if not outcome.ok:
        sys.stderr.write(f"error: run failed: {outcome.error}\n")
        return EXIT_RUN_FAILED

    summary = outcome.result.statistics.summary
    sys.stdout.write(
        f"{outcome.result.run_id}: mean |error| {summary.mean_ns:.3f} ns over "
        f"{summary.samples} samples, {summary.timeouts} timeouts -> {out_dir}\n"
    )
    return EXIT_OK
