"""
Cross-field validation of scenario configurations.

Pydantic checks each key on its own; the functions here check how keys
relate to each other and to the topology. Every check returns a list of
human-readable violations instead of raising, so a caller can report all of
them at once.
"""

from typing import List

from src.core.config import MAX_FRAME_BYTES, MIN_FRAME_BYTES, ScenarioConfig
from src.core.logging_config import get_logger
from src.services.ptp_service import ASYMMETRY_ALGORITHMS, ClassProbing

logger = get_logger(__name__)

MIN_SYNC_INTERVALS = 10
RESERVED_FLOW_NAMES = ("load_up", "load_down")


def validate_duration(cfg: ScenarioConfig) -> List[str]:
    """
    Require room for at least ten sync intervals.

    Args:
        cfg: Parsed scenario

    Returns:
        Violations, empty when the duration is long enough
    """
    needed = MIN_SYNC_INTERVALS * cfg.ptp.sync_interval_s
    if cfg.duration_s < needed:
        return [
            f"duration_s={cfg.duration_s:g} is shorter than {MIN_SYNC_INTERVALS} sync "
            f"intervals ({needed:g}s)"
        ]
    return []


def validate_ptp(cfg: ScenarioConfig) -> List[str]:
    """
    Check the asymmetry algorithm name and the probe size.

    Args:
        cfg: Parsed scenario

    Returns:
        Violations found in the ``ptp`` section
    """
    errors = []
    algo = cfg.ptp.asymm_algo
    if algo not in ASYMMETRY_ALGORITHMS:
        errors.append(
            f"ptp.asymm_algo '{algo}' is unknown. Allowed: {', '.join(sorted(ASYMMETRY_ALGORITHMS))}"
        )
    if algo == ClassProbing.name and not MIN_FRAME_BYTES <= cfg.ptp.probe_size_bytes <= MAX_FRAME_BYTES:
        errors.append(
            f"ptp.probe_size_bytes={cfg.ptp.probe_size_bytes} outside "
            f"{MIN_FRAME_BYTES}..{MAX_FRAME_BYTES}"
        )
    return errors


def validate_references(cfg: ScenarioConfig) -> List[str]:
    """
    Every node id and link name mentioned in the file must exist.

    Args:
        cfg: Parsed scenario

    Returns:
        Violations for dangling clock overrides, link overrides and flow endpoints
    """
    errors = []
    roles = cfg.topology.node_roles()
    for node_id in cfg.clocks.overrides:
        if node_id not in roles:
            errors.append(f"clocks.overrides.{node_id}: no such node in topology '{cfg.topology.name}'")

    link_names = {f"{a}--{b}" for a, b in cfg.topology.links()}
    for name in cfg.link_overrides:
        if name not in link_names:
            errors.append(f"link_overrides.{name}: no such link (expected one of 'a--b' with a master-side)")

    for name, flow in cfg.traffic.flows.items():
        for end in ("src", "dst"):
            node_id = getattr(flow, end)
            if node_id not in roles:
                errors.append(f"traffic.flows.{name}.{end}: unknown node '{node_id}'")
            elif roles[node_id] == "router":
                errors.append(f"traffic.flows.{name}.{end}: '{node_id}' is a router, not a host")
        if flow.src == flow.dst:
            errors.append(f"traffic.flows.{name}: src and dst are both '{flow.src}'")
        if cfg.topology.name == "fig3" and name in RESERVED_FLOW_NAMES:
            errors.append(f"traffic.flows.{name}: name is reserved for the traffic.load flows")
    return errors


def validate_topology_load(cfg: ScenarioConfig) -> List[str]:
    """
    The ``line`` topology has no traffic generators, so it cannot carry load.

    Args:
        cfg: Parsed scenario

    Returns:
        Violations for load settings the topology cannot honour
    """
    if cfg.topology.name != "line":
        return []
    errors = []
    load = cfg.traffic.load
    if load.up_mbps > 0 or load.down_mbps > 0:
        errors.append("traffic.load needs the fig3 generators; topology 'line' has none")
    if any(up > 0 or down > 0 for up, down in cfg.sweep.load_points()):
        errors.append("sweep loads need the fig3 generators; topology 'line' has none")
    return errors


def warn_overload(cfg: ScenarioConfig) -> List[str]:
    """Loads at or above the link rate; reported as warnings, not violations."""
    rate = cfg.link.rate_mbps
    loads = [cfg.traffic.load.up_mbps, cfg.traffic.load.down_mbps]
    loads += [value for point in cfg.sweep.load_points() for value in point]
    loads += [flow.load_mbps for flow in cfg.traffic.flows.values()]
    warnings = []
    peak = max(loads, default=0.0)
    if peak >= rate:
        warnings.append(f"offered load {peak:g} Mbps reaches link rate {rate:g} Mbps; queues will grow without bound")
    return warnings


def validate_scenario(cfg: ScenarioConfig) -> List[str]:
    """
    Run every cross-field check.

    Args:
        cfg: Parsed scenario

    Returns:
        All violations; warnings are logged but not returned
    """
    errors: List[str] = []
    errors += validate_duration(cfg)
    errors += validate_ptp(cfg)
    errors += validate_references(cfg)
    errors += validate_topology_load(cfg)
    for warning in warn_overload(cfg):
        logger.warning(f"Scenario {cfg.scenario}: {warning}")
    return errors
