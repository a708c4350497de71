"""
Subcommands of the ``ptpsim`` command line.

Each module exposes ``register(subparsers)`` and a handler returning an
exit code.
"""

import argparse
import os

from src.core.exceptions import OutputError

EXIT_OK = 0
EXIT_RUN_FAILED = 1
EXIT_USAGE = 2


def ensure_output_dir(path: str) -> str:
    """Create ``path`` if needed and make sure it is writable."""
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise OutputError(f"Cannot create output directory {path}: {e.strerror or e}") from e
    if not os.access(path, os.W_OK):
        raise OutputError(f"Output directory {path} is not writable")
    return path


def non_negative_int(value: str) -> int:
    """argparse type for counts where 0 means "automatic"."""
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got '{value}'")
    if number < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {number}")
    return number
