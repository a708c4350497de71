"""
Deterministic discrete-event kernel.

Time is integer picoseconds. Pending events live in a binary heap keyed by
``(fire_at, seq)`` so simultaneous events dispatch in insertion order.
"""

import heapq
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Tuple

import numpy as np

from src.core.exceptions import RngStreamError, SchedulingError
from src.core.logging_config import get_logger
from src.utils.helpers import derive_seed

logger = get_logger(__name__)


@dataclass
class Event:
    """One pending callback."""

    fire_at: int
    seq: int
    action: Callable[..., Any]
    args: Tuple[Any, ...] = ()
    cancelled: bool = False


class EventHandle:
    """Returned by ``schedule``; lets the owner cancel the event."""

    __slots__ = ("_event",)

    def __init__(self, event: Event):
        self._event = event

    @property
    def fire_at(self) -> int:
        return self._event.fire_at

    @property
    def cancelled(self) -> bool:
        return self._event.cancelled

    def cancel(self) -> None:
        self._event.cancelled = True


@dataclass
class RunStats:
    """Counters returned by ``Engine.run``."""

    dispatched: int = 0
    cancelled: int = 0
    final_time: int = 0


class RngStream:
    """
    Named pseudo-random substream.

    PCG64 seeded from blake2b(root_seed, label): the same pair yields the same
    draws on every platform, distinct labels give independent streams.
    """

    def __init__(self, root_seed: int, label: str):
        self.root_seed = root_seed
        self.label = label
        self._generator = np.random.Generator(
            np.random.PCG64(derive_seed(root_seed, label))
        )

    def random(self) -> float:
        """Uniform on [0, 1)."""
        return float(self._generator.random())

    def uniform_open_closed(self) -> float:
        """Uniform on (0, 1], the domain the Pareto inverse CDF needs."""
        return 1.0 - float(self._generator.random())

    def uniforms_open_closed(self, count: int) -> np.ndarray:
        return 1.0 - self._generator.random(count)

    def uniform(self, low: float, high: float) -> float:
        return float(self._generator.uniform(low, high))

    def normal(self, sigma: float) -> float:
        if sigma == 0:
            return 0.0
        return float(self._generator.normal(0.0, sigma))

    def choice_index(self, probabilities: List[float]) -> int:
        return int(self._generator.choice(len(probabilities), p=probabilities))


class Engine:
    """Event queue, clock of true time and the run loop."""

    def __init__(self, root_seed: int = 0):
        self.root_seed = root_seed
        self._now = 0
        self._seq = 0
        self._heap: List[Tuple[int, int, Event]] = []
        self._streams: Dict[str, RngStream] = {}

    @property
    def now(self) -> int:
        return self._now

    @property
    def pending(self) -> int:
        return len(self._heap)

    def schedule(self, fire_at: int, action: Callable[..., Any], *args: Any) -> EventHandle:
        """Queue ``action(*args)`` at absolute time ``fire_at``."""
        if fire_at < self._now:
            name = getattr(action, "__qualname__", repr(action))
            raise SchedulingError(
                f"Cannot schedule {name} at {fire_at}ps: current time is {self._now}ps"
            )
        event = Event(fire_at, self._seq, action, args)
        self._seq += 1
        heapq.heappush(self._heap, (fire_at, event.seq, event))
        return EventHandle(event)

    def schedule_in(self, delay: int, action: Callable[..., Any], *args: Any) -> EventHandle:
        return self.schedule(self._now + delay, action, *args)

    def run(self, until: int) -> RunStats:
        """Dispatch every event with ``fire_at <= until``, then set now to until."""
        if until < self._now:
            raise SchedulingError(
                f"run(until={until}ps) is earlier than current time {self._now}ps"
            )
        stats = RunStats()
        heap = self._heap
        while heap and heap[0][0] <= until:
            fire_at, _, event = heapq.heappop(heap)
            if event.cancelled:
                stats.cancelled += 1
                continue
            self._now = fire_at
            event.action(*event.args)
            stats.dispatched += 1
        self._now = until
        stats.final_time = until
        logger.debug(
            f"Engine ran to {until}ps: {stats.dispatched} dispatched, "
            f"{stats.cancelled} cancelled, {len(heap)} pending"
        )
        return stats

    def rng_stream(self, label: str) -> RngStream:
        """Create the substream for ``label``; each label may be created once."""
        if label in self._streams:
            raise RngStreamError(f"Random stream '{label}' already created in this run")
        stream = RngStream(self.root_seed, label)
        self._streams[label] = stream
        return stream
