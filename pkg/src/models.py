"""Pydantic models for plans, results and reports."""

from datetime import datetime
from enum import StrEnum
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from openflow.constants import ProtocolVersion
from topology import (
    MAX_DATAPATH_ID,
    HostSpec,
    Link,
    TopologySpec,
    custom,
    host_mac,
    linear,
    ofnet,
    single,
    tree,
)
from traffic import ArrivalSpec, Schedule, TrafficProfile


class Mode(StrEnum):
    LATENCY = "latency"
    THROUGHPUT = "throughput"
    PATH_PROVISION = "path_provision"
    TOPOLOGY_DISCOVERY = "topology_discovery"
    TOPOLOGY_CHANGE = "topology_change"
    FAILOVER = "failover"
    SESSION_CAPACITY = "session_capacity"
    FLOW_QUALITY = "flow_quality"
    RTT = "rtt"


class LatencyVariant(StrEnum):
    SERIAL = "serial"
    PIPELINED = "pipelined"


class MessageClass(StrEnum):
    ASYNC = "async"
    SYNC = "sync"


class PathInstall(StrEnum):
    INGRESS = "ingress"
    EDGE_ONLY = "edge_only"
    HOP_BY_HOP = "hop_by_hop"


class OracleRole(StrEnum):
    PRIMARY = "primary"
    BACKUP = "backup"


class TopologyChoice(StrEnum):
    SINGLE = "single"
    LINEAR = "linear"
    TREE = "tree"
    CUSTOM = "custom"
    OFNET = "ofnet"


_FROZEN = ConfigDict(frozen=True, extra="forbid")


class OracleBehavior(BaseModel):
    """Injectable behaviour of the reference controller."""

    model_config = _FROZEN

    service_delay: float = Field(default=0.0, ge=0)
    rate_cap: float | None = Field(default=None, gt=0)
    drop_every_nth: int | None = Field(default=None, ge=1)
    discovery_sweep_period: float | None = Field(default=None, gt=0)
    path_install: PathInstall = PathInstall.INGRESS
    per_hop_delay: float = Field(default=0.0, ge=0)
    role: OracleRole = OracleRole.PRIMARY
    first_response_delay: float = Field(default=0.0, ge=0)
    session_cap: int | None = Field(default=None, ge=0)
    versions: tuple[ProtocolVersion, ...] = (ProtocolVersion.V1_3, ProtocolVersion.V1_0)
    queue_size: int = Field(default=1024, ge=1)


class TopologyPlan(BaseModel):
    """Parameters a ``TopologySpec`` is built from.

    ``switches`` defaults to the plan's switch count for linear topologies.
    Custom links are ``(dpid_a, port_a, dpid_b, port_b)``; custom hosts are
    attached after the highest link port of each switch.
    """

    model_config = _FROZEN

    kind: TopologyChoice = TopologyChoice.LINEAR
    switches: int | None = Field(default=None, ge=1)
    depth: int = Field(default=2, ge=1)
    fanout: int = Field(default=2, ge=1)
    hosts_per_switch: int = Field(default=64, ge=0, le=0xFEFF)
    custom_switches: list[int] = Field(default_factory=list)
    links: list[tuple[int, int, int, int]] = Field(default_factory=list)

    def to_spec(self, n_switches: int) -> TopologySpec:
        hosts = self.hosts_per_switch
        match self.kind:
            case TopologyChoice.SINGLE:
                return single(hosts)
            case TopologyChoice.LINEAR:
                return linear(self.switches or n_switches, hosts)
            case TopologyChoice.TREE:
                return tree(self.depth, self.fanout, hosts)
            case TopologyChoice.OFNET:
                return ofnet()
        return self._custom_spec()

    def _custom_spec(self) -> TopologySpec:
        dpids = self.custom_switches or sorted(
            {a for a, _, _, _ in self.links} | {b for _, _, b, _ in self.links}
        )
        links = [Link((a, pa), (b, pb)) for a, pa, b, pb in self.links]
        highest = {dpid: 0 for dpid in dpids}
        for a, pa, b, pb in self.links:
            highest[a] = max(highest.get(a, 0), pa)
            highest[b] = max(highest.get(b, 0), pb)
        host_specs = [
            HostSpec(host_mac(dpid, index), (dpid, highest[dpid] + index))
            for dpid in dpids
            for index in range(1, self.hosts_per_switch + 1)
        ]
        return custom(dpids, links, host_specs)


class BenchmarkPlan(BaseModel):
    """One test's full parameterization. Defaults follow the CBench setup."""

    model_config = _FROZEN

    mode: Mode
    controller_endpoints: list[str] = Field(min_length=1)
    n_switches: int = Field(default=16, ge=1, le=MAX_DATAPATH_ID)
    loops: int = Field(default=20, ge=1)
    test_duration: float = Field(default=300.0, gt=0)
    inter_test_delay: float = Field(default=2.0, ge=0)
    warmup_loops: int = Field(default=1, ge=0)
    traffic: TrafficProfile = Field(default_factory=TrafficProfile)
    rate: float = Field(default=100.0, gt=0)
    schedule: Schedule | None = None
    topology: TopologyPlan = Field(default_factory=TopologyPlan)
    response_timeout: float = Field(default=2.0, gt=0)
    handshake_timeout: float = Field(default=5.0, gt=0)
    of_versions: tuple[ProtocolVersion, ...] = (ProtocolVersion.V1_3, ProtocolVersion.V1_0)
    strict_matching: bool = False
    buffer_size: int = Field(default=256, ge=0)
    flow_table_capacity: int = Field(default=65536, ge=1)
    bind_address: str | None = None
    seed: int = 0
    label: str = "controller"
    cpu_sample_period: float = Field(default=1.0, gt=0)

    # Mode-specific knobs
    variant: LatencyVariant = LatencyVariant.SERIAL
    pipeline_depth: int = Field(default=8, ge=1)
    message_class: MessageClass = MessageClass.ASYNC
    pairs: int | None = Field(default=None, ge=1)
    link_removal: bool = True
    capacity_step: int = Field(default=50, ge=1)
    capacity_hard_cap: int = Field(default=5000, ge=1, le=MAX_DATAPATH_ID)
    capacity_failure_threshold: float = Field(default=0.05, ge=0, le=1)
    bucket_interval: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def check_loops(self) -> "BenchmarkPlan":
        if self.warmup_loops >= self.loops:
            raise ValueError(
                f"warmup_loops ({self.warmup_loops}) must be below loops ({self.loops})"
            )
        return self

    @property
    def measured_loops(self) -> int:
        return self.loops - self.warmup_loops

    def topology_spec(self) -> TopologySpec:
        return self.topology.to_spec(self.n_switches)

    def arrival_spec(self) -> ArrivalSpec:
        """Arrival process for this mode unless ``schedule`` overrides it."""
        default = {
            Mode.LATENCY: Schedule.SERIAL_LOCKSTEP,
            Mode.RTT: Schedule.SERIAL_LOCKSTEP,
            Mode.THROUGHPUT: Schedule.AS_FAST_AS_POSSIBLE,
        }.get(self.mode, Schedule.UNIFORM)
        return ArrivalSpec(
            rate=self.rate, duration=self.test_duration, schedule=self.schedule or default
        )


class SessionCounters(BaseModel):
    """Snapshot of one switch session's counters."""

    datapath_id: int
    packet_in_sent: int = 0
    responses_received: int = 0
    flow_mods_received: int = 0
    packet_outs_received: int = 0
    flow_mods_rejected: int = 0
    echo_rtts: list[float] = Field(default_factory=list)
    last_response_at: float | None = None
    keepalives_answered: int = 0
    sync_requests_sent: int = 0
    sync_replies_received: int = 0
    discovery_probes_received: int = 0
    discovery_packet_ins_sent: int = 0
    unknown_messages: int = 0
    errors_received: int = 0


# Per-mode payloads


class LatencyPayload(BaseModel):
    mode: Literal["latency"] = "latency"
    variant: LatencyVariant = LatencyVariant.SERIAL
    message_class: MessageClass = MessageClass.ASYNC
    samples: list[float] = Field(default_factory=list)
    per_switch_mean: dict[int, float] = Field(default_factory=dict)
    unanswered: int = 0

    @property
    def headline(self) -> float | None:
        means = list(self.per_switch_mean.values())
        return sum(means) / len(means) if means else None

    @property
    def sample_values(self) -> list[float]:
        return self.samples


class ThroughputPayload(BaseModel):
    mode: Literal["throughput"] = "throughput"
    message_class: MessageClass = MessageClass.ASYNC
    duration: float
    responses: int
    per_switch_rate: dict[int, float] = Field(default_factory=dict)
    fleet_rate: float = 0.0

    @property
    def headline(self) -> float | None:
        return self.fleet_rate

    @property
    def sample_values(self) -> list[float]:
        return list(self.per_switch_rate.values())


class PathProvisionPayload(BaseModel):
    mode: Literal["path_provision"] = "path_provision"
    provision_times: list[float] = Field(default_factory=list)
    pairs_tried: int = 0
    timeouts: int = 0
    provision_rate: float = 0.0

    @property
    def headline(self) -> float | None:
        times = self.provision_times
        return sum(times) / len(times) if times else None

    @property
    def sample_values(self) -> list[float]:
        return self.provision_times


class DiscoveryPayload(BaseModel):
    mode: Literal["topology_discovery", "topology_change"] = "topology_discovery"
    discovery_time: float
    switches: int
    links: int
    change_time: float | None = None
    probed: dict[str, bool] = Field(default_factory=dict)

    @property
    def headline(self) -> float | None:
        if self.mode == "topology_change":
            return self.change_time
        return self.discovery_time

    @property
    def sample_values(self) -> list[float]:
        return [] if self.headline is None else [self.headline]


class FailoverPayload(BaseModel):
    mode: Literal["failover"] = "failover"
    switchover: dict[int, float] = Field(default_factory=dict)
    fleet_max: float = 0.0

    @property
    def headline(self) -> float | None:
        return self.fleet_max

    @property
    def sample_values(self) -> list[float]:
        return list(self.switchover.values())


class CapacityStep(BaseModel):
    sessions: int
    failures: int


class CapacityPayload(BaseModel):
    mode: Literal["session_capacity"] = "session_capacity"
    capacity: int
    reached_hard_cap: bool = False
    steps: list[CapacityStep] = Field(default_factory=list)

    @property
    def headline(self) -> float | None:
        return float(self.capacity)

    @property
    def sample_values(self) -> list[float]:
        return [float(self.capacity)]


class FlowBucket(BaseModel):
    start: float
    sent: int = 0
    received: int = 0
    missed: int = 0


class FlowQualityPayload(BaseModel):
    mode: Literal["flow_quality"] = "flow_quality"
    sent: int
    received: int
    missed: int
    buckets: list[FlowBucket] = Field(default_factory=list)
    setup_latencies: list[float] = Field(default_factory=list)

    @property
    def miss_rate(self) -> float:
        return self.missed / self.sent if self.sent else 0.0

    @property
    def headline(self) -> float | None:
        return self.miss_rate

    @property
    def sample_values(self) -> list[float]:
        return self.setup_latencies


class RttPayload(BaseModel):
    mode: Literal["rtt"] = "rtt"
    samples: list[float] = Field(default_factory=list)
    per_switch_mean: dict[int, float] = Field(default_factory=dict)

    @property
    def headline(self) -> float | None:
        return sum(self.samples) / len(self.samples) if self.samples else None

    @property
    def sample_values(self) -> list[float]:
        return self.samples


Payload = Annotated[
    Union[
        LatencyPayload,
        ThroughputPayload,
        PathProvisionPayload,
        DiscoveryPayload,
        FailoverPayload,
        CapacityPayload,
        FlowQualityPayload,
        RttPayload,
    ],
    Field(discriminator="mode"),
]

# Headline metric name and unit per mode.
METRICS: dict[Mode, tuple[str, str]] = {
    Mode.LATENCY: ("mean_latency", "s"),
    Mode.THROUGHPUT: ("fleet_responses_per_s", "1/s"),
    Mode.PATH_PROVISION: ("mean_provision_time", "s"),
    Mode.TOPOLOGY_DISCOVERY: ("discovery_time", "s"),
    Mode.TOPOLOGY_CHANGE: ("change_time", "s"),
    Mode.FAILOVER: ("max_switchover_time", "s"),
    Mode.SESSION_CAPACITY: ("sessions", "count"),
    Mode.FLOW_QUALITY: ("miss_rate", "fraction"),
    Mode.RTT: ("mean_rtt", "s"),
}


class IterationResult(BaseModel):
    index: int
    warmup: bool = False
    started_at: datetime
    ended_at: datetime
    counters: list[SessionCounters] = Field(default_factory=list)
    payload: Payload | None = None
    cpu: list[float] = Field(default_factory=list)
    failed: bool = False
    error: str | None = None

    @property
    def headline(self) -> float | None:
        if self.failed or self.payload is None:
            return None
        return self.payload.headline


class Stats(BaseModel):
    n: int = Field(ge=1)
    min: float
    max: float
    mean: float
    stddev: float = Field(ge=0)
    p50: float
    p95: float
    p99: float


class IterationSummary(BaseModel):
    """One measured iteration: its headline value and its sample statistics."""

    index: int
    value: float | None
    stats: Stats | None = None
    failed: bool = False


class EnvironmentInfo(BaseModel):
    hostname: str
    platform: str
    python_version: str
    cpu_count: int
    clock_resolution: float
    harness_version: str
    started_at: datetime


class RunReport(BaseModel):
    plan: BenchmarkPlan
    label: str
    metric: str
    unit: str
    environment: EnvironmentInfo
    iterations: list[IterationResult] = Field(default_factory=list)
    summaries: list[IterationSummary] = Field(default_factory=list)
    overall: Stats | None = None

    @model_validator(mode="after")
    def check_consistency(self) -> "RunReport":
        if len(self.summaries) != self.plan.measured_loops:
            raise ValueError(
                f"{len(self.summaries)} summaries for {self.plan.measured_loops} "
                f"measured loops"
            )
        for iteration in self.iterations:
            payload = iteration.payload
            if payload is not None and payload.mode != self.plan.mode.value:
                raise ValueError(
                    f"iteration {iteration.index} carries a {payload.mode} payload "
                    f"in a {self.plan.mode} run"
                )
        return self

    @property
    def n_switches(self) -> int:
        return self.plan.n_switches
