"""
Tests for hardware/software clock models and drift.
"""

import pytest

from src.core.exceptions import ClockError
from src.services.clocks import (
    Clock,
    DriftKind,
    DriftModel,
    build_clock,
    build_drift_model,
    start_random_walk,
)
from src.services.engine import RngStream
from src.utils.helpers import PS_PER_S, seconds_to_ps, us_to_ps


def walk_model(initial=0.0, sigma=1e-6, bound=100e-6):
    return DriftModel(
        kind=DriftKind.RANDOM_WALK,
        initial_drift=initial,
        walk_step_sigma=sigma,
        walk_update_interval=PS_PER_S,
        drift_bound=bound,
    )


def test_zero_drift_reads_true_time():
    """drift=0, anchors 0/0: one second reads exactly one second."""
    assert Clock(DriftModel()).hw_read(PS_PER_S) == PS_PER_S


@pytest.mark.parametrize(
    "drift, t_s, expected_ps",
    [
        (50e-6, 1, 1_000_050_000_000),
        (-25e-6, 2, 1_999_950_000_000),
    ],
)
def test_linear_drift(drift, t_s, expected_ps):
    """Constant drift scales elapsed time linearly."""
    clock = Clock(DriftModel(initial_drift=drift))
    assert clock.hw_read(seconds_to_ps(t_s)) == expected_ps


def test_read_before_anchor_is_an_error():
    """A clock cannot be read before its anchor."""
    clock = Clock(DriftModel(), base_true=10)
    with pytest.raises(ClockError):
        clock.hw_read(5)


def test_sw_read_without_offset_or_jitter_equals_hw_read():
    """No offset and no jitter: software reads match hardware reads."""
    clock = Clock(DriftModel(initial_drift=10e-6))
    t = seconds_to_ps(3)
    assert clock.sw_read(t) == clock.hw_read(t)


def test_sw_read_includes_offset():
    """sw_offset=-3 us, drift 0, t=1 s reads 0.999997 s."""
    clock = Clock(DriftModel())
    clock.apply_offset(us_to_ps(3))
    assert clock.sw_offset == -us_to_ps(3)
    assert clock.sw_read(PS_PER_S) == 999_997_000_000


def test_sw_jitter_stays_in_range():
    """j_max=2 us keeps every read within [corrected, corrected + 2 us]."""
    clock = Clock(DriftModel(), sw_jitter_max=us_to_ps(2))
    rng = RngStream(1, "jitter:test")
    t = seconds_to_ps(1)
    base = clock.corrected_read(t)
    reads = [clock.sw_read(t, rng) for _ in range(500)]
    assert all(base <= r <= base + us_to_ps(2) for r in reads)
    assert len(set(reads)) > 1


def test_apply_offset_is_additive_and_notifies():
    """+2 us then -2 us nets to zero; every call notifies listeners once."""
    clock = Clock(DriftModel())
    calls = []
    clock.on_adjust(lambda: calls.append(clock.sw_offset))
    clock.apply_offset(us_to_ps(2))
    clock.apply_offset(-us_to_ps(2))
    clock.apply_offset(0)
    assert clock.sw_offset == 0
    assert calls == [-us_to_ps(2), 0, 0]


def test_step_drift_with_zero_sigma_keeps_drift():
    """A zero-sigma walk step leaves the drift unchanged."""
    clock = Clock(walk_model(initial=5e-6, sigma=0.0))
    clock.step_drift(PS_PER_S, RngStream(1, "walk"))
    assert clock.drift == 5e-6


def test_step_drift_is_clamped_to_bound():
    """Large steps never push |drift| past the bound."""
    clock = Clock(walk_model(initial=100e-6, sigma=1e-3, bound=100e-6))
    rng = RngStream(3, "walk")
    for k in range(1, 51):
        clock.step_drift(k * PS_PER_S, rng)
        assert abs(clock.drift) <= 100e-6


def test_step_drift_keeps_reading_continuous():
    """Re-anchoring at t leaves hw_read(t) unchanged."""
    clock = Clock(walk_model(initial=20e-6, sigma=5e-6))
    t = seconds_to_ps(2)
    before = clock.hw_read(t)
    clock.step_drift(t, RngStream(1, "walk"))
    assert clock.hw_read(t) == before
    assert clock.base_true == t
    # one picosecond later differs from the old line by at most a tick
    assert abs(clock.hw_read(t + 1) - (before + 1)) <= 1


def test_step_drift_on_constant_model_is_an_error():
    """Only random-walk clocks can step their drift."""
    with pytest.raises(ClockError):
        Clock(DriftModel()).step_drift(PS_PER_S, RngStream(1, "walk"))


def test_random_walk_steps_on_every_interval(engine):
    """With a 1 s interval, a 5 s run re-anchors at 5 s last."""
    clock = Clock(walk_model())
    start_random_walk(clock, engine, engine.rng_stream("walk:n"))
    engine.run(seconds_to_ps(5))
    assert clock.base_true == seconds_to_ps(5)


def test_clock_is_monotone_under_random_walk(engine):
    """Readings strictly increase across drift steps."""
    clock = Clock(walk_model(sigma=20e-6))
    start_random_walk(clock, engine, engine.rng_stream("walk:n"))
    readings = []
    for k in range(1, 40):
        engine.run(k * PS_PER_S // 4)
        readings.append(clock.hw_read(engine.now))
    assert readings == sorted(readings)
    assert len(set(readings)) == len(readings)


def test_drift_model_rejects_initial_beyond_bound():
    """An initial drift outside the bound is rejected."""
    with pytest.raises(ClockError):
        DriftModel(initial_drift=2e-4, drift_bound=1e-4)


def test_build_drift_model_draws_within_max(engine):
    """Drawn drift lies in +/- max_ppm; a pinned value widens the bound."""
    model = build_drift_model("constant", 25, 0, 1, engine.rng_stream("drift:a"))
    assert abs(model.initial_drift) <= 25e-6
    pinned = build_drift_model("constant", 25, 0, 1, engine.rng_stream("drift:b"), fixed_ppm=40)
    assert pinned.initial_drift == pytest.approx(40e-6)
    assert pinned.drift_bound == pytest.approx(40e-6)


def test_build_clock_applies_initial_offset(engine):
    """The hardware clock starts within +/- initial_offset_max_us of true time."""
    clock = build_clock("s1", DriftModel(), 50, 0, engine.rng_stream("offset:s1"))
    assert abs(clock.hw_read(0)) <= us_to_ps(50)
    assert clock.hw_read(0) != 0
