"""
Load sweeps with seeded repetitions.

A sweep is a list of independent jobs, one per (load point, repetition).
Jobs may run in a worker pool; results are collected in job order and the
parent process writes every output file and updates the metrics, so the
number of workers never changes a byte of output.
"""

import time
import traceback
from dataclasses import dataclass, field
from multiprocessing import get_context
from typing import List, Optional, Tuple

from monitoring.prometheus_metrics import record_failure, record_run
from src.core.config import ScenarioConfig
from src.core.exceptions import OutputError
from src.core.logging_config import get_logger, setup_logging
from src.services.scenario_service import RunResult, build_scenario
from src.services.stats_service import SUMMARY_FILE, write_outputs
from src.utils.helpers import derive_seed, format_load

logger = get_logger(__name__)


@dataclass(frozen=True)
class RunJob:
    index: int
    up_mbps: float
    down_mbps: float
    repetition: int
    seed: int


@dataclass
class JobOutcome:
    job: RunJob
    result: Optional[RunResult] = None
    error: Optional[str] = None
    wall_seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.result is not None and self.error is None


@dataclass
class SweepReport:
    out_dir: str
    outcomes: List[JobOutcome] = field(default_factory=list)

    @property
    def failures(self) -> List[JobOutcome]:
        return [o for o in self.outcomes if not o.ok]

    @property
    def succeeded(self) -> int:
        return len(self.outcomes) - len(self.failures)


def run_seed(base_seed: int, up_mbps: float, down_mbps: float, repetition: int) -> int:
    """
    Root seed of one sweep run. Queue mode and asymmetry algorithm are left
    out, so scenarios that differ only in those are seed-paired.
    """
    return derive_seed(base_seed, format_load(up_mbps), format_load(down_mbps), repetition)


def plan_sweep(cfg: ScenarioConfig) -> List[RunJob]:
    """Jobs in output order: load points as listed, repetitions within each point."""
    points = cfg.sweep.load_points() or [(cfg.traffic.load.up_mbps, cfg.traffic.load.down_mbps)]
    jobs = []
    for up, down in points:
        for repetition in cfg.sweep.repetition_keys():
            seed = run_seed(cfg.sweep.base_seed, up, down, repetition)
            jobs.append(RunJob(len(jobs), up, down, repetition, seed))
    return jobs


def execute_job(cfg: ScenarioConfig, job: RunJob) -> JobOutcome:
    """Build and run one job; any failure is captured instead of raised."""
    started = time.perf_counter()
    try:
        simulation = build_scenario(cfg, job.seed, job.up_mbps, job.down_mbps)
        result = simulation.run()
        return JobOutcome(job, result=result, wall_seconds=time.perf_counter() - started)
    except Exception as e:
        logger.error(
            f"Run {job.index} (up={format_load(job.up_mbps)} down={format_load(job.down_mbps)} "
            f"seed={job.seed}) failed: {e}"
        )
        logger.debug(traceback.format_exc())
        return JobOutcome(
            job,
            error=f"{type(e).__name__}: {e}",
            wall_seconds=time.perf_counter() - started,
        )


def _execute_packed(payload: Tuple[ScenarioConfig, RunJob]) -> JobOutcome:
    return execute_job(*payload)


def _store(outcome: JobOutcome, out_dir: str) -> JobOutcome:
    if outcome.ok:
        try:
            write_outputs(outcome.result.statistics, out_dir)
        except OutputError as e:
            outcome.error = str(e)
    if outcome.ok:
        record_run(outcome.result)
    else:
        record_failure(outcome.wall_seconds)
    return outcome


def run_single(cfg: ScenarioConfig, out_dir: str, seed: Optional[int] = None) -> JobOutcome:
    """One run at the scenario's own load and seed (or ``seed``)."""
    root_seed = cfg.seed if seed is None else seed
    job = RunJob(0, cfg.traffic.load.up_mbps, cfg.traffic.load.down_mbps, 0, root_seed)
    return _store(execute_job(cfg, job), out_dir)


def run_sweep(
    cfg: ScenarioConfig,
    out_dir: str,
    workers: int = 1,
    log_level: str = "INFO",
    log_format: str = "json",
) -> SweepReport:
    """
    Run every planned job and append one summary line per successful run.

    Args:
        cfg: Validated scenario
        out_dir: Directory receiving summary.csv and the per-run files
        workers: Worker processes; 1 runs inline
        log_level: Log level configured in worker processes
        log_format: Log format configured in worker processes

    Returns:
        SweepReport with one outcome per job, in job order
    """
    jobs = plan_sweep(cfg)
    report = SweepReport(out_dir)
    workers = max(1, min(workers, len(jobs)))
    repetitions = len(cfg.sweep.repetition_keys())
    logger.info(
        f"Sweep '{cfg.scenario}': {len(jobs)} jobs ({len(jobs) // max(1, repetitions)} load points "
        f"x {repetitions} repetitions) on {workers} worker(s) -> {out_dir}/{SUMMARY_FILE}"
    )

    if workers == 1:
        for job in jobs:
            report.outcomes.append(_store(execute_job(cfg, job), out_dir))
    else:
        context = get_context("spawn")
        with context.Pool(
            processes=workers,
            initializer=setup_logging,
            initargs=(log_level, log_format),
        ) as pool:
            for outcome in pool.imap(_execute_packed, [(cfg, job) for job in jobs]):
                report.outcomes.append(_store(outcome, out_dir))

    if report.failures:
        logger.warning(f"Sweep '{cfg.scenario}': {len(report.failures)} of {len(jobs)} runs failed")
    else:
        logger.info(f"Sweep '{cfg.scenario}': all {len(jobs)} runs succeeded")
    return report
