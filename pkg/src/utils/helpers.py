"""
Reusable utility functions for the PTP load simulator.

All simulation time is carried as integer picoseconds; these helpers are the
only place where configuration floats (seconds, microseconds, Mbps) become
ticks.
"""

import hashlib
import math
import re
from typing import Union

PS_PER_NS = 1_000
PS_PER_US = 1_000_000
PS_PER_S = 1_000_000_000_000

Number = Union[int, float]


def round_half_away(value: float) -> int:
    """Round to the nearest integer, ties away from zero."""
    if value >= 0:
        return int(math.floor(value + 0.5))
    return -int(math.floor(-value + 0.5))


def seconds_to_ps(seconds: Number) -> int:
    """Convert seconds to picosecond ticks."""
    return round_half_away(seconds * PS_PER_S)


def us_to_ps(microseconds: Number) -> int:
    """Convert microseconds to picosecond ticks."""
    return round_half_away(microseconds * PS_PER_US)


def ns_to_ps(nanoseconds: Number) -> int:
    """Convert nanoseconds to picosecond ticks."""
    return round_half_away(nanoseconds * PS_PER_NS)


def mbps_to_bps(mbps: Number) -> int:
    """Convert a Mbps figure to integer bits per second."""
    return round_half_away(mbps * 1_000_000)


def serialization_ps(size_bytes: int, rate_bps: int) -> int:
    """
    Time to clock ``size_bytes`` onto a link of ``rate_bps``.

    Integer arithmetic; rounds to the nearest tick (exact at 100 Mbps, where
    one byte takes 80 ns).
    """
    numerator = size_bytes * 8 * PS_PER_S
    return (numerator + rate_bps // 2) // rate_bps


def derive_seed(*parts: object) -> int:
    """
    Hash arbitrary parts into a non-negative 63-bit seed.

    blake2b keeps the mapping identical across platforms and Python
    versions (unlike ``hash()``).
    """
    text = ":".join(str(part) for part in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") & (2**63 - 1)


def format_load(mbps: Number) -> str:
    """Format a load value compactly: 90.0 -> '90', 12.5 -> '12.5'."""
    return f"{float(mbps):g}"


def make_run_id(
    scenario: str, up_mbps: Number, down_mbps: Number, qos: str, algo: str, seed: int
) -> str:
    """Build a filesystem-safe identifier for one simulation run."""
    raw = (
        f"{scenario}_up{format_load(up_mbps)}_down{format_load(down_mbps)}"
        f"_{qos}_{algo}_seed{seed}"
    )
    return re.sub(r"[^A-Za-z0-9_.-]", "-", raw)
