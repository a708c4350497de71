"""
``ptpsim validate``: parse and check a scenario without running it.
"""

import argparse
import sys

from src.cli.commands import EXIT_OK
from src.services.scenario_service import load_scenario
from src.services.sweep_service import plan_sweep


def register(subparsers) -> None:
    parser = subparsers.add_parser("validate", help="Check a scenario file and report every violation")
    parser.add_argument("--config", required=True, help="Scenario YAML file")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    # same loader as run and sweep, so both accept exactly what passes here
    cfg = load_scenario(args.config)
    jobs = plan_sweep(cfg)
    sys.stdout.write(
        f"OK: scenario '{cfg.scenario}' ({cfg.topology.name}, {len(cfg.topology.node_roles())} nodes, "
        f"{cfg.duration_s:g}s); sweep plans {len(jobs)} runs\n"
    )
    return EXIT_OK
