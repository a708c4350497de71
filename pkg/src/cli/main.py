"""
Command-line entry point for the PTP load simulator.

    ptpsim run --config configs/baseline_fifo.yaml [--seed N] [--out DIR]
    ptpsim sweep --config configs/priority_qos.yaml --out DIR [--jobs N]
    ptpsim validate --config configs/priority_probe.yaml

Exit codes: 0 success, 1 one or more runs failed, 2 usage or configuration
error.
"""

import argparse
import sys
from typing import List, Optional

from src.cli.commands import EXIT_USAGE, run, sweep, validate
from src.core.config import get_settings
from src.core.exceptions import ConfigError, OutputError
from src.core.logging_config import get_logger, setup_logging

logger = get_logger(__name__)

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog="ptpsim",
        description=f"{settings.app_name} {settings.version}: PTP over a loaded switched network",
    )
    parser.add_argument("--log-level", type=str.upper, choices=LOG_LEVELS, default=None)
    parser.add_argument("--log-format", choices=["json", "text"], default=None)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in (run, sweep, validate):
        command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage and 0 after --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    settings = get_settings()
    setup_logging(args.log_level or settings.log_level, args.log_format or settings.log_format)

    try:
        return args.handler(args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE
    except OutputError as e:
        logger.error(f"Output error: {e}")
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
