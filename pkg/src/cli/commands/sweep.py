"""
``ptpsim sweep``: every load point of the scenario, repeated with derived seeds.
"""

import argparse
import sys

from monitoring.prometheus_metrics import write_metrics
from src.cli.commands import EXIT_OK, EXIT_RUN_FAILED, ensure_output_dir, non_negative_int
from src.core.config import get_settings, resolve_output_dir
from src.core.logging_config import get_logger
from src.services.scenario_service import load_scenario
from src.services.sweep_service import run_sweep

logger = get_logger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("sweep", help="Run a seeded load sweep")
    parser.add_argument("--config", required=True, help="Scenario YAML file")
    parser.add_argument("--out", default=None, help="Output directory (default: $PTPSIM_OUTPUT_DIR or results)")
    parser.add_argument(
        "--jobs",
        type=non_negative_int,
        default=None,
        help="Worker processes (default: $PTPSIM_JOBS, 0 = one per physical core)",
    )
    parser.add_argument("--metrics-file", default=None, help="Write Prometheus metrics here at exit")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    cfg = load_scenario(args.config)
    out_dir = ensure_output_dir(resolve_output_dir(args.out))
    settings = get_settings()

    report = run_sweep(
        cfg,
        out_dir,
        workers=settings.worker_count(args.jobs),
        log_level=args.log_level or settings.log_level,
        log_format=args.log_format or settings.log_format,
    )
    if args.metrics_file:
        write_metrics(args.metrics_file)

    sys.stdout.write(f"{report.succeeded} of {len(report.outcomes)} runs written to {out_dir}\n")
    for failure in report.failures:
        job = failure.job
        sys.stderr.write(
            f"error: run {job.index} (up={job.up_mbps:g} down={job.down_mbps:g} "
            f"seed={job.seed}) failed: {failure.error}\n"
        )
    return EXIT_RUN_FAILED if report.failures else EXIT_OK
