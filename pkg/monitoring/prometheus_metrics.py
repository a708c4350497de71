"""
Prometheus metrics for simulation runs.

Metrics live on a dedicated registry and are updated by the parent process
from each run's result, so the values never depend on the worker count.
They are never read back by the simulation.
"""

from typing import Optional

from prometheus_client import CollectorRegistry, Counter, Histogram, generate_latest, write_to_textfile

# ========================
# Metric Definitions
# ========================

REGISTRY = CollectorRegistry()

RUN_COUNTER = Counter(
    "ptpsim_runs_total", "Simulation runs by outcome", ["outcome"], registry=REGISTRY
)

RUN_DURATION = Histogram(
    "ptpsim_run_duration_seconds",
    "Wall-clock time of one simulation run in seconds",
    buckets=(0.1, 0.5, 1, 2, 5, 10, 30, 60, 120, 300, 600),
    registry=REGISTRY,
)

EVENTS_DISPATCHED = Counter(
    "ptpsim_events_dispatched_total", "Engine events dispatched", registry=REGISTRY
)

FRAMES_DROPPED = Counter(
    "ptpsim_frames_dropped_total",
    "Frames dropped by full queues or missing routes",
    ["traffic_class"],
    registry=REGISTRY,
)

PTP_EXCHANGES = Counter(
    "ptpsim_ptp_exchanges_total", "PTP exchanges by outcome", ["outcome"], registry=REGISTRY
)


# ========================
# Recording helpers
# ========================


def record_run(result) -> None:
    """Account one successful run (a ``RunResult``)."""
    RUN_COUNTER.labels(outcome="ok").inc()
    RUN_DURATION.observe(result.wall_seconds)
    EVENTS_DISPATCHED.inc(result.run_stats.dispatched)
    for traffic_class, count in result.dropped.items():
        FRAMES_DROPPED.labels(traffic_class=traffic_class).inc(count)
    PTP_EXCHANGES.labels(outcome="complete").inc(result.exchanges_completed)
    PTP_EXCHANGES.labels(outcome="timed_out").inc(result.exchanges_timed_out)


def record_failure(wall_seconds: Optional[float] = None) -> None:
    RUN_COUNTER.labels(outcome="failed").inc()
    if wall_seconds is not None:
        RUN_DURATION.observe(wall_seconds)


def render() -> bytes:
    """Registry contents in the text exposition format."""
    return generate_latest(REGISTRY)


def write_metrics(path: str) -> None:
    write_to_textfile(path, REGISTRY)
