"""
Hardware and software clock models.

The hardware clock is piecewise linear in true time:
``local = base_local + (t - base_true) * (1 + drift)``. A random-walk drift
model re-anchors the line at every update so the reading stays continuous.
The software clock adds the offset accumulated by PTP corrections and an
optional processing jitter on every read.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional

from src.core.exceptions import ClockError
from src.core.logging_config import get_logger
from src.services.engine import Engine, RngStream
from src.utils.helpers import round_half_away, seconds_to_ps, us_to_ps

logger = get_logger(__name__)


class DriftKind(str, Enum):
    CONSTANT = "constant"
    RANDOM_WALK = "random-walk"


@dataclass
class DriftModel:
    """Oscillator drift parameters, all ratios (25 ppm == 25e-6)."""

    kind: DriftKind = DriftKind.CONSTANT
    initial_drift: float = 0.0
    walk_step_sigma: float = 0.0
    walk_update_interval: int = 0  # ps
    drift_bound: float = 100e-6

    def __post_init__(self) -> None:
        if not 0 <= self.drift_bound < 1:
            raise ClockError(f"drift_bound must be in [0, 1), got {self.drift_bound}")
        if abs(self.initial_drift) > self.drift_bound:
            raise ClockError(
                f"initial drift {self.initial_drift} exceeds bound {self.drift_bound}"
            )
        if self.kind is DriftKind.RANDOM_WALK and self.walk_update_interval <= 0:
            raise ClockError("random-walk drift needs a positive update interval")


class Clock:
    """
    One node's hwClock + swClock pair.

    ``sw_offset`` only changes through ``apply_offset``; listeners registered
    with ``on_adjust`` run right after every correction.
    """

    def __init__(
        self,
        model: DriftModel,
        base_local: int = 0,
        base_true: int = 0,
        sw_jitter_max: int = 0,
        name: str = "clock",
    ):
        self.model = model
        self.name = name
        self.base_local = base_local
        self.base_true = base_true
        self.drift = model.initial_drift
        self.sw_offset = 0
        self.sw_jitter_max = sw_jitter_max
        self._listeners: List[Callable[[], None]] = []

    def hw_read(self, t: int) -> int:
        """Hardware clock reading at true time ``t``."""
        if t < self.base_true:
            raise ClockError(
                f"{self.name}: read at {t}ps precedes anchor {self.base_true}ps"
            )
        elapsed = t - self.base_true
        return self.base_local + elapsed + round_half_away(elapsed * self.drift)

    def corrected_read(self, t: int) -> int:
        """Software clock without jitter; what the statistics compare."""
        return self.hw_read(t) + self.sw_offset

    def sw_read(self, t: int, rng: Optional[RngStream] = None) -> int:
        """Software timestamp: hardware reading, PTP offset and processing jitter."""
        value = self.corrected_read(t)
        if self.sw_jitter_max > 0 and rng is not None:
            value += round_half_away(rng.uniform(0.0, float(self.sw_jitter_max)))
        return value

    def apply_offset(self, theta: int) -> None:
        """Correct the software clock: it moves back by theta."""
        self.sw_offset -= theta
        for listener in self._listeners:
            listener()

    def on_adjust(self, listener: Callable[[], None]) -> None:
        self._listeners.append(listener)

    def step_drift(self, t: int, rng: RngStream) -> None:
        """Advance a random-walk drift by one Normal step, clamped to the bound."""
        if self.model.kind is not DriftKind.RANDOM_WALK:
            raise ClockError(f"{self.name}: step_drift called on a constant drift model")
        # re-anchor first so hw_read is continuous at t
        self.base_local = self.hw_read(t)
        self.base_true = t
        bound = self.model.drift_bound
        stepped = self.drift + rng.normal(self.model.walk_step_sigma)
        self.drift = min(bound, max(-bound, stepped))


def start_random_walk(clock: Clock, engine: Engine, rng: RngStream) -> None:
    """Schedule ``step_drift`` on every update boundary for the whole run."""
    interval = clock.model.walk_update_interval

    def _step() -> None:
        clock.step_drift(engine.now, rng)
        engine.schedule_in(interval, _step)

    engine.schedule_in(interval, _step)


def build_drift_model(
    kind: str,
    max_ppm: float,
    walk_sigma_ppm: float,
    walk_interval_s: float,
    rng: RngStream,
    fixed_ppm: Optional[float] = None,
) -> DriftModel:
    """
    Draw a node's initial drift.

    ``fixed_ppm`` pins it; otherwise uniform in +/-max_ppm. The bound is the
    larger of max_ppm and the pinned value.
    """
    if fixed_ppm is not None:
        initial = fixed_ppm * 1e-6
    elif max_ppm > 0:
        initial = rng.uniform(-max_ppm, max_ppm) * 1e-6
    else:
        initial = 0.0
    bound = max(max_ppm * 1e-6, abs(initial))
    return DriftModel(
        kind=DriftKind(kind),
        initial_drift=initial,
        walk_step_sigma=walk_sigma_ppm * 1e-6,
        walk_update_interval=seconds_to_ps(walk_interval_s),
        drift_bound=bound,
    )


def build_clock(
    name: str,
    model: DriftModel,
    initial_offset_max_us: float,
    sw_jitter_us: float,
    offset_rng: RngStream,
) -> Clock:
    """Construct a clock whose hardware reading starts at a random offset."""
    base_local = 0
    if initial_offset_max_us > 0:
        base_local = us_to_ps(offset_rng.uniform(-initial_offset_max_us, initial_offset_max_us))
    return Clock(
        model,
        base_local=base_local,
        base_true=0,
        sw_jitter_max=us_to_ps(sw_jitter_us),
        name=name,
    )
