"""
Synchronization-error statistics.

The collector compares each slave's software clock with the master's at the
same true instant (jitter-free reads that touch no simulation state) every
time a slave corrects its clock and on a fixed sampling period. At the end
of a run it produces the three output artifacts: a summary line, the error
distribution and the raw deviation vector.
"""

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.core.exceptions import OutputError
from src.core.logging_config import get_logger
from src.services.clocks import Clock
from src.services.engine import Engine
from src.utils.helpers import format_load, ns_to_ps

logger = get_logger(__name__)

SUMMARY_FILE = "summary.csv"
SUMMARY_COLUMNS = [
    "scenario",
    "seed",
    "up_mbps",
    "down_mbps",
    "qos",
    "algo",
    "slaves",
    "mean_ns",
    "std_ns",
    "min_ns",
    "max_ns",
    "samples",
    "timeouts",
]
PDF_COLUMNS = ["bin_center_ns", "probability"]
VECTOR_COLUMNS = ["time_ps", "slave", "error_ps"]
TRUE_TIME_COLUMNS = ["slave_true_ps", "master_true_ps"]


@dataclass(frozen=True)
class ErrorSample:
    """Slave-minus-master deviation at true time ``t`` (picoseconds)."""

    t: int
    slave: str
    error: int
    slave_true: Optional[int] = None
    master_true: Optional[int] = None


@dataclass
class SummaryRecord:
    scenario: str
    seed: int
    up_mbps: float
    down_mbps: float
    qos: str
    algo: str
    slaves: int
    mean_ns: float = math.nan
    std_ns: float = math.nan
    min_ns: float = math.nan
    max_ns: float = math.nan
    samples: int = 0
    timeouts: int = 0

    @property
    def valid(self) -> bool:
        return self.samples > 0

    def as_row(self) -> List[str]:
        return [
            self.scenario,
            str(self.seed),
            format_load(self.up_mbps),
            format_load(self.down_mbps),
            self.qos,
            self.algo,
            str(self.slaves),
            _fmt_ns(self.mean_ns),
            _fmt_ns(self.std_ns),
            _fmt_ns(self.min_ns),
            _fmt_ns(self.max_ns),
            str(self.samples),
            str(self.timeouts),
        ]


def _fmt_ns(value: float) -> str:
    # three decimals of a nanosecond is picosecond precision
    return "nan" if math.isnan(value) else f"{value:.3f}"


@dataclass
class RunStatistics:
    """Everything ``write_outputs`` needs for one run."""

    run_id: str
    summary: SummaryRecord
    samples: List[ErrorSample]
    pdf: List[Tuple[float, float]]
    true_time_columns: bool = False


class StatsCollector:
    """Records slave-vs-master deviations during a run."""

    def __init__(self, engine: Engine, master_clock: Clock, true_time_columns: bool = False):
        self.engine = engine
        self.master_clock = master_clock
        self.true_time_columns = true_time_columns
        self.samples: List[ErrorSample] = []
        self.slave_clocks: Dict[str, Clock] = {}
        self.synchronized_at: Dict[str, int] = {}

    def register_slave(self, slave_id: str, clock: Clock) -> None:
        self.slave_clocks[slave_id] = clock
        clock.on_adjust(lambda: self.sample(slave_id))

    def sample(self, slave_id: str) -> ErrorSample:
        t = self.engine.now
        slave_value = self.slave_clocks[slave_id].corrected_read(t)
        master_value = self.master_clock.corrected_read(t)
        slave_true = master_true = None
        if self.true_time_columns:
            slave_true = slave_value - t
            master_true = master_value - t
        return self.record_error(t, slave_id, slave_value - master_value, slave_true, master_true)

    def record_error(
        self,
        t: int,
        slave: str,
        error: int,
        slave_true: Optional[int] = None,
        master_true: Optional[int] = None,
    ) -> ErrorSample:
        sample = ErrorSample(t, slave, error, slave_true, master_true)
        self.samples.append(sample)
        return sample

    def mark_synchronized(self, slave_id: str, t: int) -> None:
        """First completed exchange of a slave; earlier samples are warm-up."""
        self.synchronized_at.setdefault(slave_id, t)

    def start_periodic(self, interval: int) -> None:
        def _tick() -> None:
            for slave_id in self.slave_clocks:
                self.sample(slave_id)
            self.engine.schedule_in(interval, _tick)

        self.engine.schedule_in(interval, _tick)

    def steady_samples(self) -> List[ErrorSample]:
        """Samples taken at or after each slave's first completed exchange."""
        synced = self.synchronized_at
        return [s for s in self.samples if s.slave in synced and s.t >= synced[s.slave]]


def summarize(
    samples: List[ErrorSample],
    scenario: str,
    seed: int,
    up_mbps: float,
    down_mbps: float,
    qos: str,
    algo: str,
    slaves: int,
    timeouts: int = 0,
) -> SummaryRecord:
    """Mean, standard deviation, min and max of |error| in nanoseconds."""
    record = SummaryRecord(scenario, seed, up_mbps, down_mbps, qos, algo, slaves, timeouts=timeouts)
    if not samples:
        logger.warning(f"Run {scenario}/seed {seed} produced no steady-state samples")
        return record
    magnitudes = np.abs(np.array([s.error for s in samples], dtype=np.int64)) / 1000.0
    record.mean_ns = float(np.mean(magnitudes))
    record.std_ns = float(np.std(magnitudes))
    record.min_ns = float(np.min(magnitudes))
    record.max_ns = float(np.max(magnitudes))
    record.samples = len(samples)
    return record


def histogram(samples: List[ErrorSample], bin_width_ns: float) -> List[Tuple[float, float]]:
    """
    Probability of the signed error per half-open bin ``[k*w, (k+1)*w)``.
    Only occupied bins are listed, in ascending order.
    """
    width_ps = ns_to_ps(bin_width_ns)
    if width_ps <= 0:
        raise ValueError(f"bin width must be positive, got {bin_width_ns}ns")
    if not samples:
        return []
    errors = np.array([s.error for s in samples], dtype=np.int64)
    bins, counts = np.unique(np.floor_divide(errors, width_ps), return_counts=True)
    total = counts.sum()
    return [
        ((int(k) + 0.5) * width_ps / 1000.0, int(c) / total)
        for k, c in zip(bins, counts)
    ]


def _csv_text(header: List[str], rows: List[List[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def write_outputs(stats: RunStatistics, out_dir: str) -> None:
    """
    Write ``pdf_<runid>.csv`` and ``vector_<runid>.csv``, then append one line
    to ``summary.csv``. The summary line is written last, in one call, so a
    failure never leaves a partial line behind.
    """
    try:
        os.makedirs(out_dir, exist_ok=True)

        pdf_rows = [[f"{center:.3f}", f"{probability:.12g}"] for center, probability in stats.pdf]
        with open(os.path.join(out_dir, f"pdf_{stats.run_id}.csv"), "w", newline="") as fh:
            fh.write(_csv_text(PDF_COLUMNS, pdf_rows))

        header = VECTOR_COLUMNS + (TRUE_TIME_COLUMNS if stats.true_time_columns else [])
        vector_rows = []
        for s in stats.samples:
            row = [str(s.t), s.slave, str(s.error)]
            if stats.true_time_columns:
                row += [str(s.slave_true), str(s.master_true)]
            vector_rows.append(row)
        with open(os.path.join(out_dir, f"vector_{stats.run_id}.csv"), "w", newline="") as fh:
            fh.write(_csv_text(header, vector_rows))

        summary_path = os.path.join(out_dir, SUMMARY_FILE)
        needs_header = not os.path.exists(summary_path) or os.path.getsize(summary_path) == 0
        line = _csv_text(SUMMARY_COLUMNS, [stats.summary.as_row()])
        if not needs_header:
            line = line.split("\n", 1)[1]
        with open(summary_path, "a", newline="") as fh:
            fh.write(line)
    except OSError as exc:
        logger.error(f"Writing outputs for {stats.run_id} failed: {exc}")
        raise OutputError(f"Cannot write outputs for {stats.run_id} to {out_dir}: {exc}") from exc

    logger.info(f"Wrote outputs for {stats.run_id} ({len(stats.samples)} samples)")
