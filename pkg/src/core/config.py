"""
Configuration management for the PTP load simulator.

Two layers live here: application ``Settings`` read from environment
variables (prefix ``PTPSIM_``) and ``.env``, and the pydantic schema of a
scenario file. Scenario keys mirror the module configuration keys
(``link.rate_mbps``, ``ptp.sync_interval_s``, ...); unknown keys are
rejected.
"""

from itertools import product
from typing import Dict, List, Literal, Optional, Tuple

import psutil
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

MIN_FRAME_BYTES = 64
MAX_FRAME_BYTES = 1518


class Settings(BaseSettings):
    """Application settings with environment variable support."""

    model_config = SettingsConfigDict(
        env_prefix="PTPSIM_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # App settings
    app_name: str = "PTP Load Simulator"
    version: str = "1.0.0"

    # Logging
    log_level: str = "INFO"
    log_format: Literal["json", "text"] = "json"

    # Runs
    output_dir: str = "results"
    jobs: int = Field(0, ge=0)

    def worker_count(self, requested: Optional[int] = None) -> int:
        """Worker processes for a sweep; 0 means one per physical core."""
        jobs = requested if requested is not None else self.jobs
        if jobs > 0:
            return jobs
        return psutil.cpu_count(logical=False) or psutil.cpu_count() or 1


def get_settings() -> Settings:
    """Fresh settings, so environment changes after import are honoured."""
    return Settings()


def resolve_output_dir(cli_value: Optional[str] = None) -> str:
    """``--out`` wins over ``PTPSIM_OUTPUT_DIR``, which wins over the default."""
    if cli_value:
        return cli_value
    return get_settings().output_dir


# Global settings instance
settings = Settings()


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


# --- clocks ---------------------------------------------------------------


class DriftConfig(StrictModel):
    kind: Literal["constant", "random-walk"] = "constant"
    max_ppm: float = Field(25.0, ge=0, lt=1e6)
    walk_sigma_ppm: float = Field(0.0, ge=0)
    walk_interval_s: float = Field(1.0, gt=0)
    fixed_ppm: Optional[float] = Field(None, gt=-1e6, lt=1e6)


class ClockConfig(StrictModel):
    drift: DriftConfig = Field(default_factory=DriftConfig)
    sw_jitter_us: float = Field(0.0, ge=0)
    initial_offset_max_us: float = Field(0.0, ge=0)


class ClocksConfig(StrictModel):
    master: ClockConfig = Field(default_factory=ClockConfig)
    slave: ClockConfig = Field(default_factory=ClockConfig)
    router: ClockConfig = Field(default_factory=ClockConfig)
    overrides: Dict[str, ClockConfig] = Field(default_factory=dict)

    def for_node(self, node_id: str, role: str) -> ClockConfig:
        if node_id in self.overrides:
            return self.overrides[node_id]
        return getattr(self, role)


# --- network --------------------------------------------------------------


class PropDelayConfig(StrictModel):
    down_us: float = Field(5.0, ge=0)
    up_us: float = Field(5.0, ge=0)


class LinkConfig(StrictModel):
    rate_mbps: float = Field(100.0, gt=0)
    prop_us: PropDelayConfig = Field(default_factory=PropDelayConfig)

    @field_validator("prop_us", mode="before")
    @classmethod
    def _symmetric_shorthand(cls, value):
        # a bare number means the same delay both ways
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return {"down_us": value, "up_us": value}
        return value


class QueueConfig(StrictModel):
    mode: Literal["fifo", "priority"] = "fifo"
    capacity: Optional[int] = Field(None, ge=1)


class RouterConfig(StrictModel):
    hop_delay_us: float = Field(5.0, ge=0)
    transparent_clock: bool = False
    perfect_clock: bool = False
    downstream_extra_us: float = Field(0.0, ge=0)


class TopologyConfig(StrictModel):
    name: Literal["fig3", "line"] = "fig3"
    slaves: int = Field(10, ge=1)
    # line topology only
    routers: int = Field(1, ge=0)
    # fig3 only: "fabric" hands generator frames straight to the attached
    # router, "link" serializes them on the generator access link first
    generator_attach: Literal["fabric", "link"] = "fabric"

    def slave_ids(self) -> List[str]:
        return [f"s{i}" for i in range(1, self.slaves + 1)]

    def router_ids(self) -> List[str]:
        if self.name == "fig3":
            return ["routerA", "routerB"]
        return [f"router{i}" for i in range(1, self.routers + 1)]

    def generator_ids(self) -> List[str]:
        return ["trafGen1", "trafGen2"] if self.name == "fig3" else []

    def node_roles(self) -> Dict[str, str]:
        """Node id -> role (master, router, generator, slave), in build order."""
        roles = {"master": "master"}
        roles.update({r: "router" for r in self.router_ids()})
        roles.update({g: "generator" for g in self.generator_ids()})
        roles.update({s: "slave" for s in self.slave_ids()})
        return roles

    def links(self) -> List[Tuple[str, str]]:
        """Links as (master-side end, far end) pairs."""
        if self.name == "fig3":
            pairs = [
                ("master", "routerA"),
                ("routerA", "routerB"),
                ("routerA", "trafGen1"),
                ("routerB", "trafGen2"),
            ]
            pairs += [("routerB", s) for s in self.slave_ids()]
            return pairs
        chain = ["master"] + self.router_ids()
        pairs = list(zip(chain, chain[1:]))
        pairs += [(chain[-1], s) for s in self.slave_ids()]
        return pairs


# --- protocol -------------------------------------------------------------


class PtpConfig(StrictModel):
    sync_interval_s: float = Field(0.2, gt=0)
    two_step: bool = True
    asymm_algo: str = "none"
    probe_size_bytes: int = 1000
    delay_asymmetry_us: float = 0.0
    timeout_intervals: float = Field(2.0, gt=0)
    delay_req_max_wait_s: float = Field(0.0, ge=0)


# --- traffic --------------------------------------------------------------


class FlowConfig(StrictModel):
    src: str
    dst: str
    load_mbps: float = Field(0.0, ge=0)
    size_bytes: Optional[int] = Field(None, ge=MIN_FRAME_BYTES, le=MAX_FRAME_BYTES)
    size_mix: Optional[List[Tuple[int, float]]] = None
    shape_a: float = Field(1.5, gt=1)
    start_s: float = Field(0.0, ge=0)
    stop_s: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _one_size_spec(self) -> "FlowConfig":
        if self.size_bytes is not None and self.size_mix is not None:
            raise ValueError("give either size_bytes or size_mix, not both")
        if self.size_mix is not None:
            if not self.size_mix:
                raise ValueError("size_mix must not be empty")
            for size, probability in self.size_mix:
                if not MIN_FRAME_BYTES <= size <= MAX_FRAME_BYTES:
                    raise ValueError(f"size_mix entry {size} outside {MIN_FRAME_BYTES}..{MAX_FRAME_BYTES}")
                if probability < 0:
                    raise ValueError("size_mix probabilities must be non-negative")
            if sum(p for _, p in self.size_mix) <= 0:
                raise ValueError("size_mix probabilities must not all be zero")
        if self.stop_s is not None and self.stop_s <= self.start_s:
            raise ValueError("stop_s must be after start_s")
        return self

    def sizes(self) -> Tuple[List[int], List[float]]:
        if self.size_mix is not None:
            return [s for s, _ in self.size_mix], [p for _, p in self.size_mix]
        return [self.size_bytes or 1000], [1.0]


class LoadConfig(StrictModel):
    up_mbps: float = Field(0.0, ge=0)
    down_mbps: float = Field(0.0, ge=0)
    size_bytes: int = Field(1000, ge=MIN_FRAME_BYTES, le=MAX_FRAME_BYTES)
    shape_a: float = Field(1.5, gt=1)


class TrafficConfig(StrictModel):
    load: LoadConfig = Field(default_factory=LoadConfig)
    flows: Dict[str, FlowConfig] = Field(default_factory=dict)


# --- stats / sweep --------------------------------------------------------


class StatsConfig(StrictModel):
    sample_interval_s: float = Field(0.1, gt=0)
    bin_width_ns: float = Field(1000.0, gt=0)
    true_time_columns: bool = False


class SweepConfig(StrictModel):
    points: List[Tuple[float, float]] = Field(default_factory=list)
    up_mbps: List[float] = Field(default_factory=list)
    down_mbps: List[float] = Field(default_factory=list)
    repetitions: int = Field(15, ge=1)
    base_seed: int = Field(1, ge=0)
    seeds: Optional[List[int]] = None

    @model_validator(mode="after")
    def _grid_complete(self) -> "SweepConfig":
        if bool(self.up_mbps) != bool(self.down_mbps):
            raise ValueError("up_mbps and down_mbps must both be given for a grid")
        for up, down in self.load_points():
            if up < 0 or down < 0:
                raise ValueError("sweep loads must be non-negative")
        return self

    def load_points(self) -> List[Tuple[float, float]]:
        """Explicit points first, then the up x down grid, without repeats."""
        seen = []
        for point in list(self.points) + list(product(self.up_mbps, self.down_mbps)):
            point = (float(point[0]), float(point[1]))
            if point not in seen:
                seen.append(point)
        return seen

    def repetition_keys(self) -> List[int]:
        return list(self.seeds) if self.seeds else list(range(self.repetitions))


class ScenarioConfig(StrictModel):
    """One scenario file."""

    scenario: str = "fig3"
    seed: int = Field(1, ge=0)
    duration_s: float = Field(60.0, gt=0)
    topology: TopologyConfig = Field(default_factory=TopologyConfig)
    clocks: ClocksConfig = Field(default_factory=ClocksConfig)
    link: LinkConfig = Field(default_factory=LinkConfig)
    link_overrides: Dict[str, LinkConfig] = Field(default_factory=dict)
    queue: QueueConfig = Field(default_factory=QueueConfig)
    router: RouterConfig = Field(default_factory=RouterConfig)
    ptp: PtpConfig = Field(default_factory=PtpConfig)
    traffic: TrafficConfig = Field(default_factory=TrafficConfig)
    stats: StatsConfig = Field(default_factory=StatsConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)

    def link_for(self, a: str, b: str) -> LinkConfig:
        """Link spec for ``a--b``; an override only replaces the keys it sets."""
        override = self.link_overrides.get(f"{a}--{b}")
        if override is None:
            return self.link
        merged = self.link.model_dump()
        merged.update(override.model_dump(exclude_unset=True))
        return LinkConfig.model_validate(merged)

    def with_load(self, up_mbps: float, down_mbps: float) -> "ScenarioConfig":
        load = self.traffic.load.model_copy(update={"up_mbps": up_mbps, "down_mbps": down_mbps})
        traffic = self.traffic.model_copy(update={"load": load})
        return self.model_copy(update={"traffic": traffic})
