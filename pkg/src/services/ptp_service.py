"""
PTP master and slave applications.

Message flow per sync interval and slave:

    master --Sync(T1~)------> slave   (slave records T2 at ingress)
    master --FollowUp(T1)---> slave   (two-step only)
    master <--DelayReq------- slave   (slave records T3 at egress)
    master --DelayResp(T4)--> slave   (slave computes the offset and corrects)

All timestamps are software-clock readings of the node taking them. The
master never corrects its clock, so its software clock is its hardware clock
plus optional read jitter.
"""

from collections import deque
from dataclasses import dataclass
from enum import Enum
from functools import partial
from typing import Callable, Deque, Dict, List, Optional, Type

from src.core.exceptions import ProtocolError
from src.core.logging_config import get_logger
from src.services.engine import Engine, EventHandle, RngStream
from src.services.network import (
    PROBE_PORT,
    PTP_EVENT_PORT,
    PTP_FRAME_BYTES,
    PTP_GENERAL_PORT,
    Frame,
    FrameKind,
    Host,
)

logger = get_logger(__name__)

SEQ_ID_MODULUS = 1 << 16


class MessageKind(str, Enum):
    SYNC = "Sync"
    FOLLOW_UP = "Follow_Up"
    DELAY_REQ = "Delay_Req"
    DELAY_RESP = "Delay_Resp"


@dataclass
class PtpMessage:
    """
    PTP payload. ``slave_id`` plays the role of the requesting port identity so
    a master serving several slaves can address each DelayResp.
    """

    kind: MessageKind
    seq_id: int
    slave_id: str
    origin_ts: Optional[int] = None
    recv_ts: Optional[int] = None
    correction: int = 0
    domain: int = 0

    @property
    def is_event(self) -> bool:
        return self.kind in (MessageKind.SYNC, MessageKind.DELAY_REQ)

    @property
    def udp_port(self) -> int:
        return PTP_EVENT_PORT if self.is_event else PTP_GENERAL_PORT


class ExchangeState(str, Enum):
    AWAIT_FOLLOW_UP = "await_followup"
    AWAIT_DELAY_RESP = "await_delayresp"
    COMPLETE = "complete"
    TIMED_OUT = "timed_out"


@dataclass
class ExchangeRecord:
    seq_id: int
    t1: Optional[int] = None
    t2: Optional[int] = None
    t3: Optional[int] = None
    t4: Optional[int] = None
    c_ms: int = 0
    c_sm: int = 0
    state: ExchangeState = ExchangeState.AWAIT_FOLLOW_UP
    timeout: Optional[EventHandle] = None

    @property
    def has_timestamps(self) -> bool:
        return None not in (self.t1, self.t2, self.t3, self.t4)


@dataclass
class MasterConfig:
    sync_interval: int  # ps
    two_step: bool = True


@dataclass
class SlaveConfig:
    delay_asymmetry: int = 0  # ps, (d_ms - d_sm) / 2
    exchange_timeout: int = 0  # ps
    two_step: bool = True
    delay_req_max_wait: int = 0  # ps


def _halve_toward_zero(value: int) -> int:
    return value // 2 if value >= 0 else -((-value) // 2)


def compute_offset(record: ExchangeRecord, cfg: SlaveConfig) -> int:
    """
    Offset of the slave from the master:

        theta = ((T2 - T1 - c_ms) - (T4 - T3 - c_sm)) / 2 - delayAsymmetry

    The halving rounds toward zero.
    """
    if not record.has_timestamps:
        raise ProtocolError(f"offset requested for incomplete exchange seq={record.seq_id}")
    downstream = record.t2 - record.t1 - record.c_ms
    upstream = record.t4 - record.t3 - record.c_sm
    return _halve_toward_zero(downstream - upstream) - cfg.delay_asymmetry


def make_ptp_frame(
    host: Host,
    dst: str,
    message: PtpMessage,
    egress_hook: Optional[Callable[[Frame, int], None]] = None,
) -> Frame:
    return host.network.new_frame(
        size=PTP_FRAME_BYTES,
        src=host.id,
        dst=dst,
        kind=FrameKind.PTP,
        udp_dst_port=message.udp_port,
        message=message,
        egress_hook=egress_hook,
    )


def class_probe_emit(
    host: Host,
    dst: str,
    probe_size: int,
    on_egress: Optional[Callable[[Frame, int], None]] = None,
) -> Frame:
    """
    Send one LOW-class probe frame to ``dst`` right now, on the same egress
    port the following PTP frame will take. ``on_egress`` fires when the
    probe's first bit leaves the host.
    """
    frame = host.network.new_frame(
        size=probe_size,
        src=host.id,
        dst=dst,
        kind=FrameKind.PROBE,
        udp_dst_port=PROBE_PORT,
        egress_hook=on_egress,
    )
    host.send(frame)
    return frame


class AsymmetryAlgorithm:
    """
    Plugin slot for asymmetry mitigation; the default does nothing.

    ``send_event_message`` wraps the sending of every Sync and DelayReq.
    Algorithms with ``serializes_syncs`` set make the master send its Syncs
    one slave at a time, the next only once the previous Sync is on the wire.
    """

    name = "none"
    serializes_syncs = False

    def send_event_message(self, app: "PtpApp", dst: str, send: Callable[[], None]) -> None:
        send()

    def on_exchange_complete(self, app: "PtpApp", record: ExchangeRecord, theta: int) -> int:
        return theta


class ClassProbing(AsymmetryAlgorithm):
    """
    Precede every Sync and DelayReq with a low-priority probe frame.

    The PTP frame is queued the instant its probe starts transmitting, so it
    leaves right behind its own probe. Each Sync then trails its own probe
    through the network, as each DelayReq does on the way up.
    """

    name = "class_probe"
    serializes_syncs = True

    def __init__(self, probe_size: int):
        self.probe_size = probe_size

    def send_event_message(self, app: "PtpApp", dst: str, send: Callable[[], None]) -> None:
        class_probe_emit(app.host, dst, self.probe_size, on_egress=lambda frame, t: send())
        app.probes_sent += 1


ASYMMETRY_ALGORITHMS: Dict[str, Type[AsymmetryAlgorithm]] = {
    AsymmetryAlgorithm.name: AsymmetryAlgorithm,
    ClassProbing.name: ClassProbing,
}


def make_asymmetry_algorithm(name: str, probe_size: int = 1000) -> AsymmetryAlgorithm:
    if name not in ASYMMETRY_ALGORITHMS:
        raise ProtocolError(
            f"Unknown asymmetry algorithm '{name}'. Known: {', '.join(sorted(ASYMMETRY_ALGORITHMS))}"
        )
    if name == ClassProbing.name:
        return ClassProbing(probe_size)
    return ASYMMETRY_ALGORITHMS[name]()


class PtpApp:
    """State shared by master and slave applications."""

    def __init__(
        self,
        host: Host,
        engine: Engine,
        algo: AsymmetryAlgorithm,
        jitter_rng: Optional[RngStream] = None,
    ):
        if host.clock is None:
            raise ProtocolError(f"PTP node {host.id} has no clock")
        self.host = host
        self.engine = engine
        self.algo = algo
        self.jitter_rng = jitter_rng
        self.probes_sent = 0

    def timestamp(self, t: int) -> int:
        return self.host.clock.sw_read(t, self.jitter_rng)

    def _send(self, dst: str, message: PtpMessage, egress_hook=None) -> None:
        self.host.send(make_ptp_frame(self.host, dst, message, egress_hook))


class PtpMaster(PtpApp):
    """Periodic Sync source answering DelayReqs."""

    def __init__(
        self,
        host: Host,
        engine: Engine,
        config: MasterConfig,
        slaves: List[str],
        algo: AsymmetryAlgorithm,
        jitter_rng: Optional[RngStream] = None,
    ):
        super().__init__(host, engine, algo, jitter_rng)
        self.config = config
        self.slaves = list(slaves)
        self.seq_id = 0
        self.syncs_sent = 0
        self.delay_resps_sent = 0
        host.bind(PTP_EVENT_PORT, self._on_event_frame)

    def start(self) -> None:
        self.engine.schedule_in(self.config.sync_interval, self.master_on_sync_timer)

    def master_on_sync_timer(self) -> None:
        self.seq_id = (self.seq_id + 1) % SEQ_ID_MODULUS
        if self.algo.serializes_syncs:
            self._sync_in_turn(self.seq_id, deque(self.slaves))
        else:
            for slave in self.slaves:
                self.algo.send_event_message(self, slave, partial(self._send_sync, self.seq_id, slave))
        self.engine.schedule_in(self.config.sync_interval, self.master_on_sync_timer)

    def _sync_in_turn(self, seq_id: int, remaining: Deque[str]) -> None:
        if not remaining:
            return
        slave = remaining.popleft()
        after = partial(self._sync_in_turn, seq_id, remaining)
        self.algo.send_event_message(self, slave, partial(self._send_sync, seq_id, slave, after))

    def _send_sync(self, seq_id: int, slave: str, after: Optional[Callable[[], None]] = None) -> None:
        sync = PtpMessage(
            MessageKind.SYNC,
            seq_id,
            slave,
            origin_ts=self.timestamp(self.engine.now),
        )

        def _on_egress(frame: Frame, t: int) -> None:
            self._on_sync_egress(frame, t)
            if after is not None:
                after()

        self._send(slave, sync, egress_hook=_on_egress)
        self.syncs_sent += 1

    def _on_sync_egress(self, frame: Frame, t: int) -> None:
        t1 = self.timestamp(t)
        sync = frame.message
        if self.config.two_step:
            follow_up = PtpMessage(
                MessageKind.FOLLOW_UP, sync.seq_id, sync.slave_id, origin_ts=t1
            )
            self._send(frame.dst, follow_up)
        else:
            sync.origin_ts = t1

    def _on_event_frame(self, frame: Frame) -> None:
        if frame.message.kind is MessageKind.DELAY_REQ:
            self.master_on_delay_req(frame.message, self.engine.now, frame.src)

    def master_on_delay_req(self, message: PtpMessage, t: int, requester: str) -> None:
        t4 = self.timestamp(t)
        response = PtpMessage(
            MessageKind.DELAY_RESP,
            message.seq_id,
            message.slave_id,
            recv_ts=t4,
            correction=message.correction,
        )
        self._send(requester, response)
        self.delay_resps_sent += 1


class PtpSlave(PtpApp):
    """Ordinary clock synchronising its software clock to the master."""

    def __init__(
        self,
        host: Host,
        engine: Engine,
        config: SlaveConfig,
        master_id: str,
        algo: AsymmetryAlgorithm,
        jitter_rng: Optional[RngStream] = None,
        wait_rng: Optional[RngStream] = None,
        on_first_exchange: Optional[Callable[[str, int], None]] = None,
    ):
        super().__init__(host, engine, algo, jitter_rng)
        self.config = config
        self.master_id = master_id
        self.wait_rng = wait_rng
        self.on_first_exchange = on_first_exchange
        self.records: Dict[int, ExchangeRecord] = {}
        self.completed = 0
        self.timed_out = 0
        self.last_offset: Optional[int] = None
        host.bind(PTP_EVENT_PORT, self._on_frame)
        host.bind(PTP_GENERAL_PORT, self._on_frame)

    def _on_frame(self, frame: Frame) -> None:
        message = frame.message
        if message.slave_id != self.host.id:
            logger.info(f"{self.host.id} ignoring {message.kind.value} for {message.slave_id}")
            return
        if message.kind is MessageKind.SYNC:
            self.slave_on_sync(message, self.engine.now)
        elif message.kind is MessageKind.FOLLOW_UP:
            self.slave_on_follow_up(message)
        elif message.kind is MessageKind.DELAY_RESP:
            self.slave_on_delay_resp(message)

    def slave_on_sync(self, message: PtpMessage, t: int) -> None:
        t2 = self.timestamp(t)
        stale = self.records.pop(message.seq_id, None)
        if stale is not None:
            logger.info(f"{self.host.id} replacing pending exchange seq={message.seq_id} ({stale.state.value})")
            if stale.timeout is not None:
                stale.timeout.cancel()
        record = ExchangeRecord(message.seq_id, t2=t2, c_ms=message.correction)
        record.timeout = self.engine.schedule_in(
            self.config.exchange_timeout, self._on_timeout, record
        )
        self.records[message.seq_id] = record
        if self.config.two_step:
            record.state = ExchangeState.AWAIT_FOLLOW_UP
        else:
            record.t1 = message.origin_ts
            self._request_delay(record)

    def slave_on_follow_up(self, message: PtpMessage) -> None:
        record = self.records.get(message.seq_id)
        if record is None or record.state is not ExchangeState.AWAIT_FOLLOW_UP:
            logger.info(f"{self.host.id} dropping unmatched Follow_Up seq={message.seq_id}")
            return
        record.t1 = message.origin_ts
        self._request_delay(record)

    def _request_delay(self, record: ExchangeRecord) -> None:
        record.state = ExchangeState.AWAIT_DELAY_RESP
        if self.config.delay_req_max_wait > 0 and self.wait_rng is not None:
            wait = int(self.wait_rng.uniform(0.0, float(self.config.delay_req_max_wait)))
            self.engine.schedule_in(wait, self._send_delay_req, record)
        else:
            self._send_delay_req(record)

    def _send_delay_req(self, record: ExchangeRecord) -> None:
        if record.state is not ExchangeState.AWAIT_DELAY_RESP:
            return
        request = PtpMessage(MessageKind.DELAY_REQ, record.seq_id, self.host.id)

        def _stamp_t3(frame: Frame, t: int) -> None:
            record.t3 = self.timestamp(t)

        self.algo.send_event_message(
            self, self.master_id, partial(self._send, self.master_id, request, _stamp_t3)
        )

    def slave_on_delay_resp(self, message: PtpMessage) -> None:
        record = self.records.get(message.seq_id)
        if record is None or record.state is not ExchangeState.AWAIT_DELAY_RESP:
            logger.info(f"{self.host.id} dropping unmatched Delay_Resp seq={message.seq_id}")
            return
        record.t4 = message.recv_ts
        record.c_sm = message.correction
        theta = compute_offset(record, self.config)
        theta = self.algo.on_exchange_complete(self, record, theta)
        record.state = ExchangeState.COMPLETE
        if record.timeout is not None:
            record.timeout.cancel()
        del self.records[message.seq_id]
        self.completed += 1
        self.last_offset = theta
        if self.completed == 1 and self.on_first_exchange is not None:
            self.on_first_exchange(self.host.id, self.engine.now)
        logger.debug(f"{self.host.id} seq={record.seq_id} offset={theta}ps")
        self.host.clock.apply_offset(theta)

    def _on_timeout(self, record: ExchangeRecord) -> None:
        if record.state in (ExchangeState.COMPLETE, ExchangeState.TIMED_OUT):
            return
        record.state = ExchangeState.TIMED_OUT
        self.timed_out += 1
        if self.records.get(record.seq_id) is record:
            del self.records[record.seq_id]
        logger.info(f"{self.host.id} exchange seq={record.seq_id} timed out")
