"""
Tests for the discrete-event kernel and its random substreams.
"""

import pytest

from src.core.exceptions import RngStreamError, SchedulingError
from src.services.engine import Engine
from src.utils.helpers import seconds_to_ps


def test_same_time_events_dispatch_in_insertion_order(engine):
    """Two events at t=5 scheduled A then B run A then B."""
    order = []
    engine.schedule(5, order.append, "A")
    engine.schedule(5, order.append, "B")
    engine.schedule(3, order.append, "early")
    engine.run(10)
    assert order == ["early", "A", "B"]


def test_schedule_at_now_runs_before_later_events(engine):
    """An event at now() dispatches before anything with a larger fire time."""
    order = []
    engine.schedule(7, order.append, "later")
    engine.schedule(engine.now, order.append, "now")
    engine.run(10)
    assert order == ["now", "later"]


def test_schedule_in_the_past_is_fatal(engine):
    """Scheduling before now() raises and names the current time."""
    engine.run(10)
    with pytest.raises(SchedulingError, match="current time is 10ps"):
        engine.schedule(9, lambda: None)


def test_run_on_empty_queue_advances_time(engine):
    """run(10 s) with nothing pending dispatches nothing and ends at 10 s."""
    stats = engine.run(seconds_to_ps(10))
    assert stats.dispatched == 0
    assert engine.now == seconds_to_ps(10)
    assert stats.final_time == seconds_to_ps(10)


def test_run_stops_at_until(engine):
    """Events at 1, 2 and 3 s with run(2 s) dispatch two and leave one pending."""
    for t in (1, 2, 3):
        engine.schedule(seconds_to_ps(t), lambda: None)
    stats = engine.run(seconds_to_ps(2))
    assert stats.dispatched == 2
    assert engine.pending == 1
    assert engine.run(seconds_to_ps(3)).dispatched == 1


def test_handlers_can_schedule_within_the_horizon(engine):
    """A handler at 1 s scheduling 1.5 s is dispatched by run(2 s)."""
    seen = []

    def first():
        seen.append(engine.now)
        engine.schedule(seconds_to_ps(1.5), lambda: seen.append(engine.now))

    engine.schedule(seconds_to_ps(1), first)
    stats = engine.run(seconds_to_ps(2))
    assert stats.dispatched == 2
    assert seen == [seconds_to_ps(1), seconds_to_ps(1.5)]


def test_time_never_decreases_during_dispatch(engine):
    """now() observed by handlers is monotone."""
    observed = []
    for t in (40, 10, 30, 10, 20):
        engine.schedule(t, lambda: observed.append(engine.now))
    engine.run(100)
    assert observed == sorted(observed)


def test_cancelled_events_are_skipped(engine):
    """A cancelled handle never fires and is counted."""
    fired = []
    handle = engine.schedule(5, fired.append, 1)
    handle.cancel()
    stats = engine.run(10)
    assert fired == []
    assert handle.cancelled
    assert stats.cancelled == 1
    assert stats.dispatched == 0


def test_run_until_before_now_is_rejected(engine):
    """run() cannot move time backwards."""
    engine.run(100)
    with pytest.raises(SchedulingError):
        engine.run(50)


def test_rng_stream_is_reproducible_across_engines():
    """The same (seed, label) gives identical draws in two runs."""
    a = Engine(1).rng_stream("trafGen1")
    b = Engine(1).rng_stream("trafGen1")
    assert [a.random() for _ in range(5)] == [b.random() for _ in range(5)]


def test_rng_streams_differ_by_label_and_seed():
    """Distinct labels or distinct seeds give different sequences."""

    def draws(seed, label):
        stream = Engine(seed).rng_stream(label)
        return [stream.random() for _ in range(5)]

    assert draws(1, "trafGen1") != draws(1, "trafGen2")
    assert draws(1, "trafGen1") != draws(2, "trafGen1")


def test_duplicate_stream_label_is_an_error(engine):
    """Each label may be created once per run."""
    engine.rng_stream("drift:s1")
    with pytest.raises(RngStreamError):
        engine.rng_stream("drift:s1")


def test_uniform_open_closed_stays_in_range(engine):
    """Draws feeding the Pareto inverse CDF lie in (0, 1]."""
    rng = engine.rng_stream("u")
    values = rng.uniforms_open_closed(10_000)
    assert values.min() > 0
    assert values.max() <= 1
