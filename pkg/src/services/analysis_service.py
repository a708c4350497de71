"""
Post-run comparisons over summary.csv files.
"""

import csv
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional

from scipy.stats import binomtest

from src.core.exceptions import OutputError
from src.core.logging_config import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class SummaryRow:
    scenario: str
    seed: int
    up_mbps: float
    down_mbps: float
    qos: str
    algo: str
    slaves: int
    mean_ns: float
    std_ns: float
    min_ns: float
    max_ns: float
    samples: int
    timeouts: int

    @property
    def valid(self) -> bool:
        return self.samples > 0 and not math.isnan(self.mean_ns)


@dataclass(frozen=True)
class SignTestResult:
    wins_a: int
    wins_b: int
    ties: int
    p_value: float


def read_summary(path: str) -> List[SummaryRow]:
    """Parse one summary.csv into typed rows."""
    try:
        with open(path, "r", newline="", encoding="utf-8") as fh:
            return [
                SummaryRow(
                    scenario=row["scenario"],
                    seed=int(row["seed"]),
                    up_mbps=float(row["up_mbps"]),
                    down_mbps=float(row["down_mbps"]),
                    qos=row["qos"],
                    algo=row["algo"],
                    slaves=int(row["slaves"]),
                    mean_ns=float(row["mean_ns"]),
                    std_ns=float(row["std_ns"]),
                    min_ns=float(row["min_ns"]),
                    max_ns=float(row["max_ns"]),
                    samples=int(row["samples"]),
                    timeouts=int(row["timeouts"]),
                )
                for row in csv.DictReader(fh)
            ]
    except OSError as e:
        raise OutputError(f"Cannot read summary file {path}: {e}") from e
    except (KeyError, ValueError) as e:
        raise OutputError(f"Malformed summary file {path}: {e}") from e


def select(
    rows: Iterable[SummaryRow],
    up_mbps: Optional[float] = None,
    down_mbps: Optional[float] = None,
    qos: Optional[str] = None,
    algo: Optional[str] = None,
    scenario: Optional[str] = None,
) -> List[SummaryRow]:
    """Valid rows matching every given filter."""
    selected = []
    for row in rows:
        if not row.valid:
            continue
        if up_mbps is not None and not math.isclose(row.up_mbps, up_mbps):
            continue
        if down_mbps is not None and not math.isclose(row.down_mbps, down_mbps):
            continue
        if qos is not None and row.qos != qos:
            continue
        if algo is not None and row.algo != algo:
            continue
        if scenario is not None and row.scenario != scenario:
            continue
        selected.append(row)
    return selected


def aggregate_mean(rows: Iterable[SummaryRow], **filters) -> float:
    """Mean of the per-run mean |error| (ns) over matching rows; nan if none match."""
    selected = select(rows, **filters)
    if not selected:
        return math.nan
    return sum(r.mean_ns for r in selected) / len(selected)


def paired_sign_test(rows_a: Iterable[SummaryRow], rows_b: Iterable[SummaryRow]) -> SignTestResult:
    """
    Two-sided sign test over runs paired by (seed, up, down).

    ``wins_a`` counts pairs where A has the lower mean error. Unpaired rows
    are ignored; ties are dropped from the test.
    """
    index_b = {(r.seed, r.up_mbps, r.down_mbps): r for r in rows_b if r.valid}
    wins_a = wins_b = ties = 0
    for row in rows_a:
        if not row.valid:
            continue
        other = index_b.get((row.seed, row.up_mbps, row.down_mbps))
        if other is None:
            continue
        if row.mean_ns < other.mean_ns:
            wins_a += 1
        elif row.mean_ns > other.mean_ns:
            wins_b += 1
        else:
            ties += 1
    trials = wins_a + wins_b
    p_value = binomtest(wins_a, trials, 0.5, alternative="two-sided").pvalue if trials else 1.0
    logger.debug(f"Sign test: {wins_a} vs {wins_b} ({ties} ties), p={p_value:.4g}")
    return SignTestResult(wins_a, wins_b, ties, float(p_value))
