"""
Tests for classification, queues, links, routing and residence stamping.
"""

import pytest

from src.services.clocks import Clock, DriftModel
from src.services.network import (
    BACKGROUND_PORT,
    PROBE_PORT,
    PTP_EVENT_PORT,
    PTP_GENERAL_PORT,
    Direction,
    Frame,
    FrameKind,
    Host,
    Link,
    Network,
    PortQueue,
    QueueMode,
    Router,
    TrafficClass,
    classify,
    stamp_residence,
)
from src.services.ptp_service import MessageKind, PtpMessage
from src.utils.helpers import seconds_to_ps, us_to_ps

RATE = 100_000_000
PROP = us_to_ps(5)


def frame(kind=FrameKind.BACKGROUND, port=BACKGROUND_PORT, size=1000, src="a", dst="b", message=None):
    f = Frame(size=size, src=src, dst=dst, kind=kind, udp_dst_port=port, message=message)
    f.traffic_class = classify(f)
    return f


def sync_message(seq=1):
    return PtpMessage(MessageKind.SYNC, seq, "b")


def two_hosts(engine, mode=QueueMode.PRIORITY, capacity=None):
    """a -- b, 100 Mbps, 5 us each way; returns (network, a, b, arrivals at b)."""
    network = Network(engine, mode, capacity)
    a = network.add_node(Host("a", network))
    b = network.add_node(Host("b", network))
    network.connect("a", "b", RATE, PROP, PROP)
    network.build_routes()
    arrivals = []
    for port in (PTP_EVENT_PORT, BACKGROUND_PORT):
        b.bind(port, lambda f: arrivals.append((engine.now, f.frame_id, f.kind)))
    return network, a, b, arrivals


def send_at(engine, network, host, t, **kwargs):
    f = network.new_frame(**kwargs)
    engine.schedule(t, host.send, f)
    return f


@pytest.mark.parametrize(
    "kind, port, expected",
    [
        (FrameKind.PTP, PTP_EVENT_PORT, TrafficClass.HIGH),
        (FrameKind.PTP, PTP_GENERAL_PORT, TrafficClass.HIGH),
        (FrameKind.BACKGROUND, BACKGROUND_PORT, TrafficClass.LOW),
        (FrameKind.PROBE, PROBE_PORT, TrafficClass.LOW),
        (FrameKind.BACKGROUND, None, TrafficClass.LOW),
    ],
)
def test_classify_by_udp_port(kind, port, expected):
    """PTP ports are HIGH; probes, background and malformed headers are LOW."""
    assert classify(frame(kind, port)) is expected


def test_priority_dequeue_serves_high_first():
    """Priority: a HIGH frame queued after a LOW one leaves first."""
    q = PortQueue(QueueMode.PRIORITY)
    low, high = frame(), frame(FrameKind.PTP, PTP_EVENT_PORT)
    q.push(low)
    q.push(high)
    assert q.dequeue_next() is high
    assert q.dequeue_next() is low
    assert q.dequeue_next() is None


def test_fifo_dequeue_ignores_class():
    """FIFO: B (low) then A (high) dequeues B first."""
    q = PortQueue(QueueMode.FIFO)
    b, a = frame(), frame(FrameKind.PTP, PTP_EVENT_PORT)
    q.push(b)
    q.push(a)
    assert q.dequeue_next() is b


def test_queue_capacity_drops_per_class():
    """A full LOW queue drops LOW frames and still accepts HIGH ones."""
    q = PortQueue(QueueMode.PRIORITY, capacity=1)
    assert q.push(frame())
    assert not q.push(frame())
    assert q.push(frame(FrameKind.PTP, PTP_EVENT_PORT))
    assert q.drops[TrafficClass.LOW] == 1


def test_transmit_schedules_arrival(engine):
    """90 B at 100 Mbps with 5 us propagation arrives 12.2 us after start."""
    link = Link("a", "b", RATE, PROP, us_to_ps(9))
    arrived = []
    tx = link.transmit(engine, frame(size=90), 0, Direction.DOWN, arrived.append)
    assert tx.busy_until == 7_200_000
    assert tx.arrival_at == 7_200_000 + PROP
    up = link.transmit(engine, frame(size=1500), 0, Direction.UP, arrived.append)
    assert up.arrival_at == us_to_ps(120) + us_to_ps(9)
    engine.run(seconds_to_ps(1))
    assert len(arrived) == 2


def test_idle_port_transmits_immediately(engine):
    """90 B on an idle port arrives after serialization plus propagation."""
    network, a, _, arrivals = two_hosts(engine)
    send_at(engine, network, a, 0, size=90, src="a", dst="b", kind=FrameKind.PTP,
            udp_dst_port=PTP_EVENT_PORT, message=sync_message())
    engine.run(seconds_to_ps(1))
    assert arrivals[0][0] == 7_200_000 + PROP


def test_high_frame_waits_for_frame_in_transmission(engine):
    """Non-preemption: a HIGH frame arriving 10 us into a 120 us LOW frame starts at 120 us."""
    network, a, _, arrivals = two_hosts(engine, QueueMode.PRIORITY)
    send_at(engine, network, a, 0, size=1500, src="a", dst="b", kind=FrameKind.BACKGROUND,
            udp_dst_port=BACKGROUND_PORT)
    ptp = send_at(engine, network, a, us_to_ps(10), size=90, src="a", dst="b", kind=FrameKind.PTP,
                  udp_dst_port=PTP_EVENT_PORT, message=sync_message())
    engine.run(seconds_to_ps(1))
    ptp_arrival = [t for t, fid, _ in arrivals if fid == ptp.frame_id][0]
    assert ptp_arrival == us_to_ps(120) + 7_200_000 + PROP


@pytest.mark.parametrize("mode, high_first", [(QueueMode.PRIORITY, True), (QueueMode.FIFO, False)])
def test_strict_priority_overtakes_waiting_low_frames(engine, mode, high_first):
    """LOW in flight, LOW waiting, HIGH arrives: priority sends HIGH next, FIFO does not."""
    network, a, _, arrivals = two_hosts(engine, mode)
    send_at(engine, network, a, 0, size=1500, src="a", dst="b", kind=FrameKind.BACKGROUND,
            udp_dst_port=BACKGROUND_PORT)
    waiting = send_at(engine, network, a, us_to_ps(1), size=1500, src="a", dst="b",
                      kind=FrameKind.BACKGROUND, udp_dst_port=BACKGROUND_PORT)
    ptp = send_at(engine, network, a, us_to_ps(2), size=90, src="a", dst="b", kind=FrameKind.PTP,
                  udp_dst_port=PTP_EVENT_PORT, message=sync_message())
    engine.run(seconds_to_ps(1))
    order = [fid for _, fid, _ in arrivals]
    assert (order.index(ptp.frame_id) < order.index(waiting.frame_id)) is high_first


def test_directions_do_not_contend(engine):
    """Load a->b never delays b->a (full duplex)."""
    network, a, b, _ = two_hosts(engine)
    back = []
    a.bind(PTP_EVENT_PORT, lambda f: back.append(engine.now))
    send_at(engine, network, a, 0, size=1500, src="a", dst="b", kind=FrameKind.BACKGROUND,
            udp_dst_port=BACKGROUND_PORT)
    send_at(engine, network, b, 0, size=90, src="b", dst="a", kind=FrameKind.PTP,
            udp_dst_port=PTP_EVENT_PORT, message=sync_message())
    engine.run(seconds_to_ps(1))
    assert back == [7_200_000 + PROP]


def test_full_queue_drops_and_conserves(engine):
    """Capacity 1: the third back-to-back frame is dropped; nothing is lost silently."""
    network, a, _, arrivals = two_hosts(engine, QueueMode.FIFO, capacity=1)
    for _ in range(3):
        send_at(engine, network, a, 0, size=1000, src="a", dst="b", kind=FrameKind.BACKGROUND,
                udp_dst_port=BACKGROUND_PORT)
    engine.run(seconds_to_ps(1))
    counters = network.counters
    assert counters.dropped[TrafficClass.LOW] == 1
    assert len(arrivals) == 2
    for c in TrafficClass:
        assert counters.injected[c] == counters.delivered[c] + counters.dropped[c]


def test_unknown_destination_is_dropped(engine):
    """A frame with no route is counted as a drop and send returns False."""
    network, a, _, _ = two_hosts(engine)
    f = network.new_frame(size=100, src="a", dst="nowhere", kind=FrameKind.BACKGROUND,
                          udp_dst_port=BACKGROUND_PORT)
    assert a.send(f) is False
    assert network.counters.dropped[TrafficClass.LOW] == 1


def test_fabric_attached_host_injects_into_its_router(engine):
    """Fabric frames skip the host link and queue at the router egress port."""
    network = Network(engine, QueueMode.FIFO)
    gen = network.add_node(Host("gen", network, fabric_attached=True))
    network.add_node(Router("r", network, Clock(DriftModel()), hop_delay_ps=us_to_ps(5)))
    b = network.add_node(Host("b", network))
    network.connect("r", "gen", RATE, PROP, PROP)
    network.connect("r", "b", RATE, PROP, PROP)
    network.build_routes()
    arrivals = []
    b.bind(BACKGROUND_PORT, lambda f: arrivals.append(engine.now))
    for _ in range(2):
        send_at(engine, network, gen, 0, size=1000, src="gen", dst="b", kind=FrameKind.BACKGROUND,
                udp_dst_port=BACKGROUND_PORT)
    engine.run(seconds_to_ps(1))
    # 5 us hop, then 80 us per frame back to back, then 5 us on the wire
    assert arrivals == [us_to_ps(90), us_to_ps(170)]
    assert gen.ports["r"].frames_sent == 0
    assert network.nodes["r"].ports["b"].frames_sent == 2


def test_stamp_residence_with_perfect_clock():
    """30 us residence on a perfect clock adds 30 us to the correction."""
    f = frame(FrameKind.PTP, PTP_EVENT_PORT, size=90, message=sync_message())
    t_in = seconds_to_ps(1)
    added = stamp_residence(Clock(DriftModel()), f, t_in, t_in + us_to_ps(30))
    assert added == us_to_ps(30)
    assert f.message.correction == us_to_ps(30)


def test_stamp_residence_with_drifting_clock():
    """A +100 ppm router clock measures 30 us as 30.003 us."""
    f = frame(FrameKind.PTP, PTP_EVENT_PORT, size=90, message=sync_message())
    t_in = seconds_to_ps(1)
    stamp_residence(Clock(DriftModel(initial_drift=100e-6)), f, t_in, t_in + us_to_ps(30))
    assert f.message.correction == 30_003_000


def test_fig3_routes(make_simulation):
    """routerA sends slave traffic toward routerB and master traffic to the master."""
    sim = make_simulation()
    router_a = sim.node("routerA")
    assert router_a.route("s3").neighbor == "routerB"
    assert router_a.route("master").neighbor == "master"
    assert router_a.route("trafGen2").neighbor == "routerB"
    assert sim.node("s1").route("master").neighbor == "routerB"
    assert sim.node("master").route("nowhere") is None


def test_hosts_do_not_relay(make_simulation):
    """Routing tables never send through a slave or generator."""
    sim = make_simulation()
    for node in sim.network.nodes.values():
        for dst in node.routes.destinations():
            assert node.route(dst).neighbor in ("routerA", "routerB") or node.route(dst).neighbor == dst
