"""
Evaluate the load-dependent accuracy criteria against sweep outputs.

Usage:
    python tools/check_acceptance.py results/fifo/summary.csv \
        results/priority/summary.csv results/probe/summary.csv

All rows of the given summary files are pooled; rows are told apart by their
qos and algo columns. A criterion without data at its load points is
reported as SKIP. Exit status is 1 when a hard criterion fails.
"""

import argparse
import math
import os
import sys
from dataclasses import dataclass
from typing import Callable, List

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.core.logging_config import get_logger, setup_logging  # noqa: E402
from src.services.analysis_service import (  # noqa: E402
    SummaryRow,
    aggregate_mean,
    paired_sign_test,
    read_summary,
    select,
)

logger = get_logger("check_acceptance")

US = 1000.0  # ns per microsecond


@dataclass
class Verdict:
    name: str
    status: str  # PASS, FAIL, WARN or SKIP
    detail: str
    hard: bool = True


def _us(value_ns: float) -> str:
    return "n/a" if math.isnan(value_ns) else f"{value_ns / US:.2f}us"


def zero_load_regime(rows: List[SummaryRow]) -> Verdict:
    name = "zero-load error below 10us in every run"
    runs = select(rows, up_mbps=0, down_mbps=0)
    if not runs:
        return Verdict(name, "SKIP", "no runs at (0, 0)")
    worst = max(r.mean_ns for r in runs)
    status = "PASS" if worst < 10 * US else "FAIL"
    return Verdict(name, status, f"{len(runs)} runs, worst mean {_us(worst)}")


def qos_ordering(rows: List[SummaryRow]) -> Verdict:
    name = "FIFO worse than priority at (90, 0), both within their bands"
    fifo = aggregate_mean(rows, up_mbps=90, down_mbps=0, qos="fifo", algo="none")
    prio = aggregate_mean(rows, up_mbps=90, down_mbps=0, qos="priority", algo="none")
    if math.isnan(fifo) or math.isnan(prio):
        return Verdict(name, "SKIP", "need fifo and priority runs at (90, 0)")
    in_bands = 50 * US <= fifo <= 600 * US and 2 * US <= prio <= 100 * US
    status = "PASS" if fifo > prio and in_bands else "FAIL"
    return Verdict(name, status, f"fifo {_us(fifo)}, priority {_us(prio)}")


def load_asymmetry(rows: List[SummaryRow]) -> Verdict:
    name = "FIFO error grows with asymmetric load: (90,0) > (50,50) > (0,0)"
    points = [(90, 0), (50, 50), (0, 0)]
    means = [aggregate_mean(rows, up_mbps=u, down_mbps=d, qos="fifo", algo="none") for u, d in points]
    if any(math.isnan(m) for m in means):
        return Verdict(name, "SKIP", "need fifo runs at (90,0), (50,50) and (0,0)")
    status = "PASS" if means[0] > means[1] > means[2] else "FAIL"
    return Verdict(name, status, ", ".join(_us(m) for m in means))


def probing_improvement(rows: List[SummaryRow]) -> Verdict:
    name = "class probing beats plain priority at (50, 50), sign test p < 0.05"
    probe = select(rows, up_mbps=50, down_mbps=50, qos="priority", algo="class_probe")
    plain = select(rows, up_mbps=50, down_mbps=50, qos="priority", algo="none")
    if not probe or not plain:
        return Verdict(name, "SKIP", "need priority runs with and without class_probe at (50, 50)")
    probe_mean = aggregate_mean(probe)
    plain_mean = aggregate_mean(plain)
    test = paired_sign_test(probe, plain)
    status = "PASS" if probe_mean < plain_mean and test.p_value < 0.05 else "FAIL"
    detail = (
        f"probe {_us(probe_mean)}, plain {_us(plain_mean)}, "
        f"pairs {test.wins_a}:{test.wins_b} ({test.ties} ties), p={test.p_value:.4g}"
    )
    return Verdict(name, status, detail)


def high_load_anomaly(rows: List[SummaryRow]) -> Verdict:
    name = "priority error at (90, 90) not above (50, 50)"
    high = aggregate_mean(rows, up_mbps=90, down_mbps=90, qos="priority", algo="none")
    mid = aggregate_mean(rows, up_mbps=50, down_mbps=50, qos="priority", algo="none")
    if math.isnan(high) or math.isnan(mid):
        return Verdict(name, "SKIP", "need priority runs at (90, 90) and (50, 50)", hard=False)
    status = "PASS" if high <= mid else "WARN"
    return Verdict(name, status, f"(90,90) {_us(high)}, (50,50) {_us(mid)}", hard=False)


CRITERIA: List[Callable[[List[SummaryRow]], Verdict]] = [
    zero_load_regime,
    qos_ordering,
    load_asymmetry,
    probing_improvement,
    high_load_anomaly,
]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Check sweep results against the accuracy criteria")
    parser.add_argument("summaries", nargs="+", help="summary.csv files to pool")
    args = parser.parse_args(argv)
    setup_logging("WARNING", "text")

    rows: List[SummaryRow] = []
    for path in args.summaries:
        rows.extend(read_summary(path))
    invalid = sum(1 for r in rows if not r.valid)
    if invalid:
        logger.warning(f"{invalid} runs without samples are ignored")

    failed = False
    for criterion in CRITERIA:
        verdict = criterion(rows)
        print(f"[{verdict.status}] {verdict.name}: {verdict.detail}")
        failed |= verdict.hard and verdict.status == "FAIL"
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
