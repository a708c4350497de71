"""
Packet network model: frames, full-duplex links, egress port queues, routers
and end hosts.

Delays a frame sees per hop: queueing at the egress port, serialization
(size * 8 / rate), propagation, then a constant processing delay inside the
next router. Routers with transparent-clock support add the residence time of
PTP event messages to the message's correction field.
"""

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any, Callable, Deque, Dict, List, Optional, Set

from src.core.exceptions import PtpSimError
from src.core.logging_config import get_logger
from src.services.clocks import Clock
from src.services.engine import Engine, EventHandle
from src.utils.helpers import serialization_ps

if TYPE_CHECKING:
    from src.services.ptp_service import PtpMessage

logger = get_logger(__name__)

PTP_EVENT_PORT = 319
PTP_GENERAL_PORT = 320
BACKGROUND_PORT = 9000
PROBE_PORT = 9001

PTP_FRAME_BYTES = 90


class TrafficClass(str, Enum):
    HIGH = "high"
    LOW = "low"


class QueueMode(str, Enum):
    FIFO = "fifo"
    PRIORITY = "priority"


class Direction(str, Enum):
    """DOWN is away from the master side of a link, UP towards it."""

    DOWN = "down"
    UP = "up"


class FrameKind(str, Enum):
    PTP = "ptp"
    BACKGROUND = "background"
    PROBE = "probe"


@dataclass(eq=False)
class Frame:
    """A transmittable unit; ``size`` counts every header."""

    size: int
    src: str
    dst: str
    kind: FrameKind
    udp_dst_port: Optional[int]
    message: Optional["PtpMessage"] = None
    traffic_class: TrafficClass = TrafficClass.LOW
    ingress_stamp: Optional[int] = None
    ingress_at: Optional[int] = None
    # called by the originating host when the first bit leaves its port
    egress_hook: Optional[Callable[["Frame", int], None]] = None
    frame_id: int = 0


def classify(frame: Frame) -> TrafficClass:
    """
    Deep packet inspection reduced to the UDP destination port.

    PTP event (319) and general (320) traffic is HIGH; anything else,
    including frames with no usable header, is LOW.
    """
    port = frame.udp_dst_port
    if isinstance(port, int) and port in (PTP_EVENT_PORT, PTP_GENERAL_PORT):
        return TrafficClass.HIGH
    return TrafficClass.LOW


def carries_ptp_event(frame: Frame) -> bool:
    return frame.message is not None and frame.message.is_event


@dataclass
class FrameCounters:
    """Per-class bookkeeping for the conservation invariant."""

    injected: Dict[TrafficClass, int] = field(
        default_factory=lambda: {c: 0 for c in TrafficClass}
    )
    delivered: Dict[TrafficClass, int] = field(
        default_factory=lambda: {c: 0 for c in TrafficClass}
    )
    dropped: Dict[TrafficClass, int] = field(
        default_factory=lambda: {c: 0 for c in TrafficClass}
    )

    def in_flight(self, traffic_class: TrafficClass) -> int:
        return (
            self.injected[traffic_class]
            - self.delivered[traffic_class]
            - self.dropped[traffic_class]
        )


class PortQueue:
    """
    Egress buffer of one port.

    PRIORITY mode keeps a queue per class and always serves HIGH first; FIFO
    mode keeps one queue in arrival order. ``capacity`` bounds each class
    queue (the single queue in FIFO mode); ``None`` means unbounded.
    """

    def __init__(self, mode: QueueMode = QueueMode.FIFO, capacity: Optional[int] = None):
        self.mode = QueueMode(mode)
        self.capacity = capacity
        self.high_q: Deque[Frame] = deque()
        self.low_q: Deque[Frame] = deque()
        self.fifo_q: Deque[Frame] = deque()
        self.busy_until = 0
        self.transmitting = False
        self.drops: Dict[TrafficClass, int] = {c: 0 for c in TrafficClass}

    def __len__(self) -> int:
        return len(self.high_q) + len(self.low_q) + len(self.fifo_q)

    def _target(self, traffic_class: TrafficClass) -> Deque[Frame]:
        if self.mode is QueueMode.FIFO:
            return self.fifo_q
        return self.high_q if traffic_class is TrafficClass.HIGH else self.low_q

    def push(self, frame: Frame) -> bool:
        """Append the frame; False (and a counted drop) when the queue is full."""
        target = self._target(frame.traffic_class)
        if self.capacity is not None and len(target) >= self.capacity:
            self.drops[frame.traffic_class] += 1
            return False
        target.append(frame)
        return True

    def dequeue_next(self) -> Optional[Frame]:
        if self.mode is QueueMode.FIFO:
            return self.fifo_q.popleft() if self.fifo_q else None
        if self.high_q:
            return self.high_q.popleft()
        if self.low_q:
            return self.low_q.popleft()
        return None


@dataclass
class Transmission:
    busy_until: int
    arrival_at: int
    arrival: EventHandle


class Link:
    """Full-duplex point-to-point link; each direction has its own port."""

    def __init__(self, a: str, b: str, rate_bps: int, prop_down_ps: int, prop_up_ps: int):
        if rate_bps <= 0:
            raise PtpSimError(f"link {a}--{b}: rate must be positive")
        self.a = a
        self.b = b
        self.rate_bps = rate_bps
        self.prop_down_ps = prop_down_ps
        self.prop_up_ps = prop_up_ps

    @property
    def name(self) -> str:
        return f"{self.a}--{self.b}"

    def serialization_ps(self, size_bytes: int) -> int:
        return serialization_ps(size_bytes, self.rate_bps)

    def prop_delay(self, direction: Direction) -> int:
        return self.prop_down_ps if direction is Direction.DOWN else self.prop_up_ps

    def transmit(
        self,
        engine: Engine,
        frame: Frame,
        start: int,
        direction: Direction,
        deliver: Callable[[Frame], None],
    ) -> Transmission:
        """Clock the frame onto the wire at ``start`` and schedule its arrival."""
        busy_until = start + self.serialization_ps(frame.size)
        arrival_at = busy_until + self.prop_delay(direction)
        handle = engine.schedule(arrival_at, deliver, frame)
        return Transmission(busy_until, arrival_at, handle)


class Port:
    """One end of a link: the owner's egress queue in one direction."""

    def __init__(
        self,
        engine: Engine,
        owner: "Node",
        link: Link,
        direction: Direction,
        queue: PortQueue,
    ):
        self.engine = engine
        self.owner = owner
        self.link = link
        self.direction = direction
        self.queue = queue
        self.peer: Optional["Node"] = None
        self.peer_port: Optional["Port"] = None
        self.frames_sent = 0
        self.bytes_sent = 0

    @property
    def neighbor(self) -> str:
        return self.link.b if self.direction is Direction.DOWN else self.link.a

    def enqueue(self, frame: Frame) -> bool:
        """Queue a frame for transmission; starts sending at once if idle."""
        frame.traffic_class = classify(frame)
        if not self.queue.push(frame):
            self.owner.network.record_drop(frame, f"queue full at {self.owner.id}->{self.neighbor}")
            return False
        if not self.queue.transmitting:
            self._start_next()
        return True

    def _start_next(self) -> None:
        frame = self.queue.dequeue_next()
        if frame is None:
            self.queue.transmitting = False
            return
        self.queue.transmitting = True
        now = self.engine.now
        # egress timestamps and residence stamping happen at the first bit
        self.owner.on_egress(frame, self)
        transmission = self.link.transmit(self.engine, frame, now, self.direction, self._deliver)
        self.queue.busy_until = transmission.busy_until
        self.frames_sent += 1
        self.bytes_sent += frame.size
        self.engine.schedule(transmission.busy_until, self._start_next)

    def _deliver(self, frame: Frame) -> None:
        self.peer.receive(frame, self.peer_port)


class RoutingTable:
    """Destination node id -> egress port."""

    def __init__(self) -> None:
        self._routes: Dict[str, Port] = {}

    def add(self, dst: str, port: Port) -> None:
        self._routes[dst] = port

    def lookup(self, dst: str) -> Optional[Port]:
        return self._routes.get(dst)

    def __contains__(self, dst: str) -> bool:
        return dst in self._routes

    def destinations(self) -> List[str]:
        return sorted(self._routes)


class Node:
    """Anything with ports: routers forward, hosts terminate."""

    forwards = False

    def __init__(self, node_id: str, network: "Network", clock: Optional[Clock] = None):
        self.id = node_id
        self.network = network
        self.engine = network.engine
        self.clock = clock
        self.ports: Dict[str, Port] = {}
        self.routes = RoutingTable()

    def route(self, dst: str) -> Optional[Port]:
        return self.routes.lookup(dst)

    def receive(self, frame: Frame, port: Port) -> None:
        raise NotImplementedError

    def on_egress(self, frame: Frame, port: Port) -> None:
        pass


def stamp_residence(clock: Clock, frame: Frame, t_in: int, t_out: int) -> int:
    """
    Add the frame's residence time, read on the router's own clock, to the
    PTP correction field. Returns the amount added.
    """
    local_in = frame.ingress_stamp if frame.ingress_stamp is not None else clock.hw_read(t_in)
    residence = clock.hw_read(t_out) - local_in
    frame.message.correction += residence
    frame.ingress_stamp = None
    frame.ingress_at = None
    return residence


class Router(Node):
    """Store-and-forward router with an optional transparent clock."""

    forwards = True

    def __init__(
        self,
        node_id: str,
        network: "Network",
        clock: Clock,
        hop_delay_ps: int,
        transparent_clock: bool = False,
        downstream_extra_ps: int = 0,
    ):
        super().__init__(node_id, network, clock)
        self.hop_delay_ps = hop_delay_ps
        self.transparent_clock = transparent_clock
        self.downstream_extra_ps = downstream_extra_ps
        self.upstream_neighbor: Optional[str] = None
        self.residence_stamped = 0

    def receive(self, frame: Frame, port: Port) -> None:
        now = self.engine.now
        if self.transparent_clock and carries_ptp_event(frame):
            frame.ingress_at = now
            frame.ingress_stamp = self.clock.hw_read(now)
        out = self.route(frame.dst)
        if out is None:
            self.network.record_drop(frame, f"no route at {self.id} to {frame.dst}")
            return
        delay = self.hop_delay_ps
        if out.neighbor != self.upstream_neighbor:
            delay += self.downstream_extra_ps
        self.engine.schedule_in(delay, out.enqueue, frame)

    def on_egress(self, frame: Frame, port: Port) -> None:
        if self.transparent_clock and carries_ptp_event(frame) and frame.ingress_stamp is not None:
            stamp_residence(self.clock, frame, frame.ingress_at, self.engine.now)
            self.residence_stamped += 1


class Host(Node):
    """
    End node: originates frames and hands arrivals to bound handlers.

    A fabric-attached host has no egress queue of its own: its frames appear
    inside the attached router at emission time, as aggregated traffic from
    the router's other ingress ports would.
    """

    def __init__(
        self,
        node_id: str,
        network: "Network",
        clock: Optional[Clock] = None,
        fabric_attached: bool = False,
    ):
        super().__init__(node_id, network, clock)
        self.fabric_attached = fabric_attached
        self._bindings: Dict[int, Callable[[Frame], None]] = {}
        self.received: Dict[FrameKind, int] = {k: 0 for k in FrameKind}

    def bind(self, udp_port: int, handler: Callable[[Frame], None]) -> None:
        self._bindings[udp_port] = handler

    def send(self, frame: Frame) -> bool:
        """Inject a frame into the network from this host."""
        return self.network.inject(self, frame)

    def receive(self, frame: Frame, port: Port) -> None:
        if frame.dst != self.id:
            self.network.record_drop(frame, f"{self.id} does not forward (dst {frame.dst})")
            return
        self.network.record_delivery(frame)
        self.received[frame.kind] += 1
        handler = self._bindings.get(frame.udp_dst_port)
        if handler is not None:
            handler(frame)

    def on_egress(self, frame: Frame, port: Port) -> None:
        if frame.egress_hook is not None and frame.src == self.id:
            frame.egress_hook(frame, self.engine.now)


class Network:
    """Owns nodes, links and the routing tables of one simulation run."""

    def __init__(
        self,
        engine: Engine,
        queue_mode: QueueMode = QueueMode.FIFO,
        queue_capacity: Optional[int] = None,
    ):
        self.engine = engine
        self.queue_mode = QueueMode(queue_mode)
        self.queue_capacity = queue_capacity
        self.nodes: Dict[str, Node] = {}
        self.links: Dict[str, Link] = {}
        self.counters = FrameCounters()
        self._next_frame_id = 0

    def add_node(self, node: Node) -> Node:
        if node.id in self.nodes:
            raise PtpSimError(f"duplicate node id '{node.id}'")
        self.nodes[node.id] = node
        return node

    def connect(self, a: str, b: str, rate_bps: int, prop_down_ps: int, prop_up_ps: int) -> Link:
        """Create a link; ``a`` is the master-side end (DOWN is a -> b)."""
        link = Link(a, b, rate_bps, prop_down_ps, prop_up_ps)
        node_a, node_b = self.nodes[a], self.nodes[b]
        port_a = Port(self.engine, node_a, link, Direction.DOWN, self._new_queue())
        port_b = Port(self.engine, node_b, link, Direction.UP, self._new_queue())
        port_a.peer, port_a.peer_port = node_b, port_b
        port_b.peer, port_b.peer_port = node_a, port_a
        node_a.ports[b] = port_a
        node_b.ports[a] = port_b
        self.links[link.name] = link
        return link

    def _new_queue(self) -> PortQueue:
        return PortQueue(self.queue_mode, self.queue_capacity)

    def build_routes(self) -> None:
        """
        Shortest-path routing tables by BFS, neighbours visited in sorted
        order. Only routers relay; hosts are leaves.
        """
        for source in self.nodes.values():
            visited: Set[str] = {source.id}
            frontier: Deque[tuple] = deque()
            for neighbor in sorted(source.ports):
                visited.add(neighbor)
                frontier.append((neighbor, source.ports[neighbor]))
            while frontier:
                node_id, first_port = frontier.popleft()
                source.routes.add(node_id, first_port)
                node = self.nodes[node_id]
                if not node.forwards:
                    continue
                for neighbor in sorted(node.ports):
                    if neighbor not in visited:
                        visited.add(neighbor)
                        frontier.append((neighbor, first_port))

    def new_frame(self, **kwargs: Any) -> Frame:
        self._next_frame_id += 1
        return Frame(frame_id=self._next_frame_id, **kwargs)

    def inject(self, host: Node, frame: Frame) -> bool:
        frame.traffic_class = classify(frame)
        self.counters.injected[frame.traffic_class] += 1
        port = host.route(frame.dst)
        if port is None:
            self.record_drop(frame, f"no route at {host.id} to {frame.dst}")
            return False
        if isinstance(host, Host) and host.fabric_attached and port.peer.forwards:
            port.peer.receive(frame, port.peer_port)
            return True
        return port.enqueue(frame)

    def record_delivery(self, frame: Frame) -> None:
        self.counters.delivered[frame.traffic_class] += 1

    def record_drop(self, frame: Frame, reason: str) -> None:
        self.counters.dropped[frame.traffic_class] += 1
        if frame.kind is FrameKind.PTP:
            logger.warning(f"Dropped PTP {frame.message.kind.value} seq={frame.message.seq_id}: {reason}")
        else:
            logger.debug(f"Dropped {frame.kind.value} frame {frame.frame_id}: {reason}")
