"""
Background load generation.

Interarrival times follow a Pareto Type I law (minimum ``b``, shape ``a``)
whose mean ``a*b/(a-1)`` is tuned so that the flow offers its target load.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.exceptions import TrafficError
from src.core.logging_config import get_logger
from src.services.engine import Engine, RngStream
from src.services.network import BACKGROUND_PORT, FrameKind, Host
from src.utils.helpers import seconds_to_ps

logger = get_logger(__name__)

DEFAULT_SHAPE = 1.5
DEFAULT_PACKET_BYTES = 1000


@dataclass(frozen=True)
class ParetoSpec:
    shape: float = DEFAULT_SHAPE
    scale: float = 1.0  # seconds

    def __post_init__(self) -> None:
        if not self.shape > 1:
            raise TrafficError(f"Pareto shape must exceed 1 for a finite mean, got {self.shape}")
        if not self.scale > 0:
            raise TrafficError(f"Pareto scale must be positive, got {self.scale}")

    @property
    def mean(self) -> float:
        return self.shape * self.scale / (self.shape - 1)


def pareto_sample(
    spec: ParetoSpec, u: Union[float, np.ndarray]
) -> Union[float, np.ndarray]:
    """Inverse CDF: ``b * u**(-1/a)`` for ``u`` in (0, 1]."""
    values = np.asarray(u, dtype=float)
    if np.any(values <= 0) or np.any(values > 1):
        raise TrafficError("uniform draw outside (0, 1]")
    samples = spec.scale * np.power(values, -1.0 / spec.shape)
    if samples.ndim == 0:
        return float(samples)
    return samples


def scale_for_load(load_bps: float, mean_size_bytes: float, shape: float) -> Optional[float]:
    """
    Pareto scale giving an offered load of ``load_bps``.

    Mean interarrival is ``mean_size * 8 / load``; inverting the Pareto mean
    gives ``b = mu * (a - 1) / a``. A zero load returns None: the flow is off.
    """
    if load_bps <= 0:
        return None
    if not shape > 1:
        raise TrafficError(f"Pareto shape must exceed 1, got {shape}")
    mean_interarrival = mean_size_bytes * 8 / load_bps
    return mean_interarrival * (shape - 1) / shape


class SizeDistribution:
    """Fixed packet size or a discrete empirical mix of sizes."""

    def __init__(self, sizes: Sequence[int], probabilities: Optional[Sequence[float]] = None):
        if not sizes:
            raise TrafficError("size distribution needs at least one size")
        self.sizes = [int(s) for s in sizes]
        if probabilities is None:
            probabilities = [1.0 / len(self.sizes)] * len(self.sizes)
        total = float(sum(probabilities))
        if len(probabilities) != len(self.sizes) or total <= 0:
            raise TrafficError("size mix probabilities do not match sizes")
        self.probabilities = [p / total for p in probabilities]

    @classmethod
    def fixed(cls, size: int) -> "SizeDistribution":
        return cls([size], [1.0])

    @property
    def is_fixed(self) -> bool:
        return len(self.sizes) == 1

    @property
    def mean(self) -> float:
        return sum(s * p for s, p in zip(self.sizes, self.probabilities))

    def sample(self, rng: RngStream) -> int:
        if self.is_fixed:
            return self.sizes[0]
        return self.sizes[rng.choice_index(self.probabilities)]


@dataclass
class TrafficFlow:
    name: str
    src: str
    dst: str
    sizes: SizeDistribution
    target_load_bps: float
    shape: float = DEFAULT_SHAPE
    start: int = 0  # ps
    stop: Optional[int] = None  # ps

    def __post_init__(self) -> None:
        scale = scale_for_load(self.target_load_bps, self.sizes.mean, self.shape)
        self.spec: Optional[ParetoSpec] = (
            ParetoSpec(self.shape, scale) if scale is not None else None
        )

    @property
    def enabled(self) -> bool:
        return self.spec is not None


def next_packet(flow: TrafficFlow, rng: RngStream) -> Tuple[int, int, str]:
    """Draw (delay until emission in ps, size in bytes, destination)."""
    if not flow.enabled:
        raise TrafficError(f"flow {flow.name} is disabled")
    delta = pareto_sample(flow.spec, rng.uniform_open_closed())
    return max(1, seconds_to_ps(delta)), flow.sizes.sample(rng), flow.dst


class TrafficGenerator:
    """Drives one flow from its source host."""

    def __init__(self, host: Host, engine: Engine, flow: TrafficFlow, rng: RngStream):
        self.host = host
        self.engine = engine
        self.flow = flow
        self.rng = rng
        self.packets_sent = 0
        self.bytes_sent = 0

    def start(self) -> None:
        if not self.flow.enabled:
            logger.info(f"Flow {self.flow.name} has zero load; not started")
            return
        self._schedule_next(self.flow.start)

    def _schedule_next(self, after: int) -> None:
        delta, size, dst = next_packet(self.flow, self.rng)
        emit_at = after + delta
        if self.flow.stop is not None and emit_at >= self.flow.stop:
            return
        self.engine.schedule(emit_at, self._emit, size, dst)

    def _emit(self, size: int, dst: str) -> None:
        frame = self.host.network.new_frame(
            size=size,
            src=self.host.id,
            dst=dst,
            kind=FrameKind.BACKGROUND,
            udp_dst_port=BACKGROUND_PORT,
        )
        self.host.send(frame)
        self.packets_sent += 1
        self.bytes_sent += size
        self._schedule_next(self.engine.now)


def offered_load_bps(flow: TrafficFlow, rng: RngStream, packets: int) -> float:
    """Offered load measured over ``packets`` draws of the flow's schedule."""
    total_ps = 0
    total_bytes = 0
    for _ in range(packets):
        delta, size, _ = next_packet(flow, rng)
        total_ps += delta
        total_bytes += size
    return total_bytes * 8 / (total_ps / 1e12)


def describe_flows(flows: List[TrafficFlow]) -> str:
    return ", ".join(
        f"{f.name}:{f.src}->{f.dst}@{f.target_load_bps / 1e6:g}Mbps" for f in flows
    )
