"""
Scenario loading and construction.

``load_scenario`` is the single entry point for reading a scenario file;
``build_scenario`` wires a parsed scenario into a ready-to-run
``Simulation``: clocks, nodes, links, routing tables, PTP applications,
background traffic and the statistics collector.
"""

import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import yaml
from pydantic import ValidationError

from src.core.config import ClockConfig, ScenarioConfig
from src.core.exceptions import ConfigError
from src.core.logging_config import get_logger
from src.services.clocks import (
    Clock,
    DriftKind,
    DriftModel,
    build_clock,
    build_drift_model,
    start_random_walk,
)
from src.services.engine import Engine, RunStats
from src.services.network import Host, Network, QueueMode, Router, TrafficClass
from src.services.ptp_service import (
    MasterConfig,
    PtpMaster,
    PtpSlave,
    SlaveConfig,
    make_asymmetry_algorithm,
)
from src.services.stats_service import (
    RunStatistics,
    StatsCollector,
    histogram,
    summarize,
)
from src.services.traffic_service import (
    SizeDistribution,
    TrafficFlow,
    TrafficGenerator,
    describe_flows,
)
from src.utils.helpers import (
    make_run_id,
    mbps_to_bps,
    round_half_away,
    seconds_to_ps,
    us_to_ps,
)
from src.utils.validators import RESERVED_FLOW_NAMES, validate_scenario

logger = get_logger(__name__)

UPSTREAM_FLOW, DOWNSTREAM_FLOW = RESERVED_FLOW_NAMES


def parse_scenario(raw: Dict[str, Any], source: str = "<scenario>") -> ScenarioConfig:
    """Validate a raw mapping; raises ConfigError listing every violation."""
    try:
        cfg = ScenarioConfig.model_validate(raw)
    except ValidationError as exc:
        violations = [
            f"{'.'.join(str(part) for part in err['loc']) or '<root>'}: {err['msg']}"
            for err in exc.errors()
        ]
        raise ConfigError(f"Invalid scenario {source}", violations) from exc
    violations = validate_scenario(cfg)
    if violations:
        raise ConfigError(f"Invalid scenario {source}", violations)
    return cfg


def load_scenario(path: str) -> ScenarioConfig:
    """
    Read and validate a YAML scenario file.

    Args:
        path: Scenario file path

    Returns:
        The validated scenario

    Raises:
        ConfigError: If the file cannot be read, is not YAML, or is invalid
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"Cannot read scenario file {path}: {exc.strerror or exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"Scenario file {path} is not valid YAML: {exc}") from exc

    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"Scenario file {path} must contain a mapping at the top level")

    cfg = parse_scenario(raw, source=path)
    logger.info(f"Loaded scenario '{cfg.scenario}' from {path}")
    return cfg


@dataclass
class RunResult:
    """Outcome of one simulation run; picklable so workers can return it."""

    run_id: str
    scenario: str
    seed: int
    up_mbps: float
    down_mbps: float
    qos: str
    algo: str
    statistics: RunStatistics
    run_stats: RunStats
    injected: Dict[str, int] = field(default_factory=dict)
    delivered: Dict[str, int] = field(default_factory=dict)
    dropped: Dict[str, int] = field(default_factory=dict)
    exchanges_completed: int = 0
    exchanges_timed_out: int = 0
    syncs_sent: int = 0
    probes_sent: int = 0
    wall_seconds: float = 0.0


class Simulation:
    """One fully wired run; call ``run()`` exactly once."""

    def __init__(self, cfg: ScenarioConfig, seed: int):
        self.cfg = cfg
        self.seed = seed
        self.engine = Engine(seed)
        self.network = Network(self.engine, QueueMode(cfg.queue.mode), cfg.queue.capacity)
        self.clocks: Dict[str, Clock] = {}
        self.master: Optional[PtpMaster] = None
        self.slaves: Dict[str, PtpSlave] = {}
        self.generators: List[TrafficGenerator] = []
        self.collector: Optional[StatsCollector] = None
        self.run_id = make_run_id(
            cfg.scenario,
            cfg.traffic.load.up_mbps,
            cfg.traffic.load.down_mbps,
            cfg.queue.mode,
            cfg.ptp.asymm_algo,
            seed,
        )
        self._finished = False

    @property
    def duration(self) -> int:
        return seconds_to_ps(self.cfg.duration_s)

    def node(self, node_id: str):
        return self.network.nodes[node_id]

    def start(self) -> None:
        self.master.start()
        for generator in self.generators:
            generator.start()

    def run(self) -> RunResult:
        if self._finished:
            raise ConfigError(f"Simulation {self.run_id} has already run")
        cfg = self.cfg
        started = time.perf_counter()
        logger.info(f"Starting run {self.run_id} ({cfg.duration_s:g}s simulated)")
        self.start()
        run_stats = self.engine.run(self.duration)
        self._finished = True

        steady = self.collector.steady_samples()
        timeouts = sum(slave.timed_out for slave in self.slaves.values())
        summary = summarize(
            steady,
            scenario=cfg.scenario,
            seed=self.seed,
            up_mbps=cfg.traffic.load.up_mbps,
            down_mbps=cfg.traffic.load.down_mbps,
            qos=cfg.queue.mode,
            algo=cfg.ptp.asymm_algo,
            slaves=len(self.slaves),
            timeouts=timeouts,
        )
        statistics = RunStatistics(
            run_id=self.run_id,
            summary=summary,
            samples=steady,
            pdf=histogram(steady, cfg.stats.bin_width_ns),
            true_time_columns=cfg.stats.true_time_columns,
        )
        counters = self.network.counters
        result = RunResult(
            run_id=self.run_id,
            scenario=cfg.scenario,
            seed=self.seed,
            up_mbps=cfg.traffic.load.up_mbps,
            down_mbps=cfg.traffic.load.down_mbps,
            qos=cfg.queue.mode,
            algo=cfg.ptp.asymm_algo,
            statistics=statistics,
            run_stats=run_stats,
            injected={c.value: counters.injected[c] for c in TrafficClass},
            delivered={c.value: counters.delivered[c] for c in TrafficClass},
            dropped={c.value: counters.dropped[c] for c in TrafficClass},
            exchanges_completed=sum(s.completed for s in self.slaves.values()),
            exchanges_timed_out=timeouts,
            syncs_sent=self.master.syncs_sent,
            probes_sent=self.master.probes_sent + sum(s.probes_sent for s in self.slaves.values()),
            wall_seconds=time.perf_counter() - started,
        )
        logger.info(
            f"Finished run {self.run_id}: {run_stats.dispatched} events, {summary.samples} samples, "
            f"mean |error| {summary.mean_ns:.3f} ns, {timeouts} timeouts"
        )
        return result


def _make_clock(engine: Engine, node_id: str, role: str, cfg: ScenarioConfig) -> Clock:
    if role == "router" and cfg.router.perfect_clock and node_id not in cfg.clocks.overrides:
        return Clock(DriftModel(), name=node_id)
    spec: ClockConfig = cfg.clocks.for_node(node_id, role)
    drift = spec.drift
    model = build_drift_model(
        drift.kind,
        drift.max_ppm,
        drift.walk_sigma_ppm,
        drift.walk_interval_s,
        engine.rng_stream(f"drift:{node_id}"),
        fixed_ppm=drift.fixed_ppm,
    )
    clock = build_clock(
        node_id,
        model,
        spec.initial_offset_max_us,
        spec.sw_jitter_us,
        engine.rng_stream(f"offset:{node_id}"),
    )
    if model.kind is DriftKind.RANDOM_WALK:
        start_random_walk(clock, engine, engine.rng_stream(f"walk:{node_id}"))
    return clock


def _build_nodes(sim: Simulation) -> None:
    cfg = sim.cfg
    for node_id, role in cfg.topology.node_roles().items():
        if role == "generator":
            fabric = cfg.topology.generator_attach == "fabric"
            sim.network.add_node(Host(node_id, sim.network, fabric_attached=fabric))
            continue
        clock = _make_clock(sim.engine, node_id, role, cfg)
        sim.clocks[node_id] = clock
        if role == "router":
            node = Router(
                node_id,
                sim.network,
                clock,
                hop_delay_ps=us_to_ps(cfg.router.hop_delay_us),
                transparent_clock=cfg.router.transparent_clock,
                downstream_extra_ps=us_to_ps(cfg.router.downstream_extra_us),
            )
        else:
            node = Host(node_id, sim.network, clock)
        sim.network.add_node(node)


def _build_links(sim: Simulation) -> None:
    cfg = sim.cfg
    for a, b in cfg.topology.links():
        spec = cfg.link_for(a, b)
        sim.network.connect(
            a,
            b,
            mbps_to_bps(spec.rate_mbps),
            us_to_ps(spec.prop_us.down_us),
            us_to_ps(spec.prop_us.up_us),
        )
        far = sim.network.nodes[b]
        if isinstance(far, Router):
            far.upstream_neighbor = a
    sim.network.build_routes()


def _build_ptp(sim: Simulation) -> None:
    cfg = sim.cfg
    engine = sim.engine
    ptp = cfg.ptp
    sync_interval = seconds_to_ps(ptp.sync_interval_s)
    slave_ids = cfg.topology.slave_ids()

    sim.collector = StatsCollector(engine, sim.clocks["master"], cfg.stats.true_time_columns)
    sim.master = PtpMaster(
        sim.node("master"),
        engine,
        MasterConfig(sync_interval=sync_interval, two_step=ptp.two_step),
        slave_ids,
        make_asymmetry_algorithm(ptp.asymm_algo, ptp.probe_size_bytes),
        jitter_rng=engine.rng_stream("jitter:master"),
    )

    slave_cfg = SlaveConfig(
        delay_asymmetry=us_to_ps(ptp.delay_asymmetry_us),
        exchange_timeout=round_half_away(ptp.timeout_intervals * sync_interval),
        two_step=ptp.two_step,
        delay_req_max_wait=seconds_to_ps(ptp.delay_req_max_wait_s),
    )
    for slave_id in slave_ids:
        wait_rng = None
        if slave_cfg.delay_req_max_wait > 0:
            wait_rng = engine.rng_stream(f"delayreq:{slave_id}")
        sim.slaves[slave_id] = PtpSlave(
            sim.node(slave_id),
            engine,
            slave_cfg,
            "master",
            make_asymmetry_algorithm(ptp.asymm_algo, ptp.probe_size_bytes),
            jitter_rng=engine.rng_stream(f"jitter:{slave_id}"),
            wait_rng=wait_rng,
            on_first_exchange=sim.collector.mark_synchronized,
        )
        sim.collector.register_slave(slave_id, sim.clocks[slave_id])
    sim.collector.start_periodic(seconds_to_ps(cfg.stats.sample_interval_s))


def scenario_flows(cfg: ScenarioConfig) -> List[TrafficFlow]:
    """Background flows: the fig3 load pair, then any explicitly configured flows."""
    flows = []
    if cfg.topology.name == "fig3":
        load = cfg.traffic.load
        sizes = SizeDistribution.fixed(load.size_bytes)
        flows.append(
            TrafficFlow(UPSTREAM_FLOW, "trafGen2", "trafGen1", sizes, mbps_to_bps(load.up_mbps), load.shape_a)
        )
        flows.append(
            TrafficFlow(DOWNSTREAM_FLOW, "trafGen1", "trafGen2", sizes, mbps_to_bps(load.down_mbps), load.shape_a)
        )
    for name, flow in cfg.traffic.flows.items():
        sizes, probabilities = flow.sizes()
        flows.append(
            TrafficFlow(
                name,
                flow.src,
                flow.dst,
                SizeDistribution(sizes, probabilities),
                mbps_to_bps(flow.load_mbps),
                flow.shape_a,
                start=seconds_to_ps(flow.start_s),
                stop=seconds_to_ps(flow.stop_s) if flow.stop_s is not None else None,
            )
        )
    return flows


def _build_traffic(sim: Simulation) -> None:
    flows = scenario_flows(sim.cfg)
    for flow in flows:
        rng = sim.engine.rng_stream(f"traffic:{flow.name}")
        sim.generators.append(TrafficGenerator(sim.node(flow.src), sim.engine, flow, rng))
    if flows:
        logger.debug(f"Run {sim.run_id} flows: {describe_flows(flows)}")


def _assemble(cfg: ScenarioConfig, seed: int) -> Simulation:
    sim = Simulation(cfg, seed)
    _build_nodes(sim)
    _build_links(sim)
    _build_ptp(sim)
    _build_traffic(sim)
    return sim


def _prepare(
    cfg: ScenarioConfig,
    seed: Optional[int],
    up_mbps: Optional[float],
    down_mbps: Optional[float],
) -> Tuple[ScenarioConfig, int]:
    if up_mbps is not None or down_mbps is not None:
        cfg = cfg.with_load(
            cfg.traffic.load.up_mbps if up_mbps is None else up_mbps,
            cfg.traffic.load.down_mbps if down_mbps is None else down_mbps,
        )
    return cfg, cfg.seed if seed is None else seed


def build_fig3(
    cfg: ScenarioConfig,
    seed: Optional[int] = None,
    up_mbps: Optional[float] = None,
    down_mbps: Optional[float] = None,
) -> Simulation:
    """
    Master, routerA, routerB and slaves s1..sN behind routerB, with trafGen1
    on routerA and trafGen2 on routerB. Upstream load (trafGen2 -> trafGen1)
    shares routerB -> routerA with DelayReqs; downstream load shares
    routerA -> routerB with Syncs and FollowUps.
    """
    if cfg.topology.name != "fig3":
        raise ConfigError(f"build_fig3 needs topology 'fig3', got '{cfg.topology.name}'")
    cfg, seed = _prepare(cfg, seed, up_mbps, down_mbps)
    return _assemble(cfg, seed)


def build_line(cfg: ScenarioConfig, seed: Optional[int] = None) -> Simulation:
    """Master, a chain of N routers (N may be 0) and the slaves at its end."""
    if cfg.topology.name != "line":
        raise ConfigError(f"build_line needs topology 'line', got '{cfg.topology.name}'")
    cfg, seed = _prepare(cfg, seed, None, None)
    return _assemble(cfg, seed)


def build_scenario(
    cfg: ScenarioConfig,
    seed: Optional[int] = None,
    up_mbps: Optional[float] = None,
    down_mbps: Optional[float] = None,
) -> Simulation:
    if cfg.topology.name == "fig3":
        return build_fig3(cfg, seed, up_mbps, down_mbps)
    if up_mbps or down_mbps:
        raise ConfigError("topology 'line' carries no background load")
    return build_line(cfg, seed)
