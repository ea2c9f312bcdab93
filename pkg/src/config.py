"""Settings, config files and plan assembly using pydantic-settings."""

import logging
import tomllib
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict
from rich.logging import RichHandler

from errors import ConfigError, ConflictingOptions, MissingController, TopologyError
from models import (
    BenchmarkPlan,
    LatencyVariant,
    MessageClass,
    Mode,
    OracleBehavior,
    PathInstall,
    TopologyChoice,
)
from openflow.constants import ProtocolVersion
from topology import build
from traffic import MixedApp, ProfileKind, Schedule


class BenchSettings(BaseSettings):
    """Process-level settings from the environment and ``.env``."""

    model_config = SettingsConfigDict(
        env_prefix="SDNBENCH_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    controller: str | None = Field(
        default=None, description="Controller endpoint used when no flag names one"
    )
    log_level: str = Field(default="WARNING", description="Logging level")
    out_dir: Path = Field(default=Path("results"), description="Report directory")
    app_version: str = Field(default="0.1.0", description="Harness version")


def setup_logging(level: str, verbose: bool = False) -> None:
    """Route stdlib logging through rich."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(rich_tracebacks=True, show_path=False)],
        force=True,
    )


# Config file sections. Every field is optional: None means "not set here".

_SECTION = ConfigDict(extra="forbid")


class ControllerSection(BaseModel):
    model_config = _SECTION

    endpoints: list[str] | None = None
    label: str | None = None


class FleetSection(BaseModel):
    model_config = _SECTION

    switches: int | None = None
    macs: int | None = None
    buffer_size: int | None = None
    flow_table_capacity: int | None = None
    of_versions: list[str] | None = None
    strict_matching: bool | None = None
    bind_address: str | None = None
    handshake_timeout: float | None = None


class TopologySection(BaseModel):
    model_config = _SECTION

    kind: TopologyChoice | None = None
    switches: int | None = None
    depth: int | None = None
    fanout: int | None = None
    custom_switches: list[int] | None = None
    links: list[tuple[int, int, int, int]] | None = None


class TrafficSection(BaseModel):
    model_config = _SECTION

    profile: ProfileKind | None = None
    packet_length: int | None = None
    rate: float | None = None
    schedule: Schedule | None = None
    weights: dict[MixedApp, float] | None = None


class TestSection(BaseModel):
    model_config = _SECTION

    loops: int | None = None
    duration: float | None = None
    delay: float | None = None
    warmup: int | None = None
    timeout: float | None = None
    seed: int | None = None
    cpu_sample_period: float | None = None
    variant: LatencyVariant | None = None
    pipeline_depth: int | None = None
    sync: bool | None = None
    pairs: int | None = None
    link_removal: bool | None = None
    step: int | None = None
    hard_cap: int | None = None
    failure_threshold: float | None = None
    interval: float | None = None


class ReportSection(BaseModel):
    model_config = _SECTION

    out_dir: Path | None = None


class ConfigFile(BaseModel):
    """Structured config document: ``[controller] [fleet] [topology] ...``."""

    model_config = _SECTION

    controller: ControllerSection = Field(default_factory=ControllerSection)
    fleet: FleetSection = Field(default_factory=FleetSection)
    topology: TopologySection = Field(default_factory=TopologySection)
    traffic: TrafficSection = Field(default_factory=TrafficSection)
    test: TestSection = Field(default_factory=TestSection)
    report: ReportSection = Field(default_factory=ReportSection)


def _location(source: str, loc: tuple[int | str, ...]) -> str:
    return f"{source}:{'.'.join(str(part) for part in loc)}" if loc else source


def parse_config(data: bytes, source: str = "<config>") -> ConfigFile:
    """Parse TOML bytes; every failure is a ConfigError pointing at its origin."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as error:
        raise ConfigError(f"not UTF-8 at byte {error.start}", source) from None
    try:
        document = tomllib.loads(text)
    except tomllib.TOMLDecodeError as error:
        raise ConfigError(f"invalid TOML: {error}", source) from None
    try:
        return ConfigFile.model_validate(document)
    except ValidationError as error:
        first = error.errors()[0]
        raise ConfigError(first["msg"], _location(source, first["loc"])) from None


def load_config(path: Path) -> ConfigFile:
    try:
        data = path.read_bytes()
    except OSError as error:
        raise ConfigError(f"cannot read config: {error.strerror}", str(path)) from None
    return parse_config(data, str(path))


class Preset(StrEnum):
    CBENCH = "cbench"
    PKTBLASTER = "pktblaster"
    OFNET = "ofnet"


@dataclass
class CliOptions:
    """Flags as given on the command line; None means "not given"."""

    controller: list[str] | None = None
    config: Path | None = None
    switches: int | None = None
    loops: int | None = None
    duration: float | None = None
    delay: float | None = None
    warmup: int | None = None
    preset: Preset | None = None
    profile: ProfileKind | None = None
    packet_length: int | None = None
    macs: int | None = None
    rate: float | None = None
    schedule: Schedule | None = None
    timeout: float | None = None
    topology: str | None = None
    of_version: list[str] | None = None
    strict: bool | None = None
    seed: int | None = None
    label: str | None = None
    out_dir: Path | None = None
    sweep_switches: str | None = None
    verbose: bool = False
    # Mode-specific
    variant: LatencyVariant | None = None
    pipeline_depth: int | None = None
    sync: bool | None = None
    pairs: int | None = None
    no_link_removal: bool | None = None
    step: int | None = None
    hard_cap: int | None = None
    interval: float | None = None


# Flags only meaningful for some modes, with the modes that accept them.
MODE_FLAGS: dict[str, tuple[Mode, ...]] = {
    "variant": (Mode.LATENCY,),
    "pipeline_depth": (Mode.LATENCY,),
    "sync": (Mode.LATENCY, Mode.THROUGHPUT),
    "pairs": (Mode.PATH_PROVISION,),
    "no_link_removal": (Mode.TOPOLOGY_DISCOVERY,),
    "step": (Mode.SESSION_CAPACITY,),
    "hard_cap": (Mode.SESSION_CAPACITY,),
    "interval": (Mode.FLOW_QUALITY,),
}


def preset_fields(preset: Preset | None) -> dict[str, Any]:
    """Plan fields a preset sets; explicit config or flags still win."""
    match preset:
        case Preset.PKTBLASTER:
            return {"loops": 5, "traffic": {"kind": ProfileKind.TCP}}
        case Preset.OFNET:
            return {
                "n_switches": 7,
                "topology": {"kind": TopologyChoice.OFNET},
                "traffic": {"kind": ProfileKind.MIXED_APP},
            }
    return {}


def parse_topology_flag(text: str) -> dict[str, Any]:
    """``single``, ``linear``, ``ofnet`` or ``tree:DEPTH,FANOUT``."""
    kind, _, args = text.partition(":")
    try:
        choice = TopologyChoice(kind.strip().lower())
    except ValueError:
        raise ConfigError(f"unknown topology '{text}'", "--topology") from None
    if choice is TopologyChoice.CUSTOM:
        raise ConfigError("custom topologies come from a config file", "--topology")
    if choice is not TopologyChoice.TREE:
        if args:
            raise ConfigError(f"{choice} takes no arguments", "--topology")
        return {"kind": choice}
    try:
        depth, fanout = (int(part) for part in args.split(","))
    except ValueError:
        raise ConfigError("expected tree:DEPTH,FANOUT", "--topology") from None
    return {"kind": choice, "depth": depth, "fanout": fanout}


def _versions(texts: list[str], source: str) -> tuple[ProtocolVersion, ...]:
    try:
        return tuple(sorted({ProtocolVersion.parse(t) for t in texts}, reverse=True))
    except ValueError as error:
        raise ConfigError(str(error), source) from None


def _set(target: dict[str, Any], key: str, value: Any) -> None:
    if value is not None:
        target[key] = value


def _config_fields(cfg: ConfigFile) -> dict[str, Any]:
    fields: dict[str, Any] = {}
    topology: dict[str, Any] = {}
    traffic: dict[str, Any] = {}

    _set(fields, "controller_endpoints", cfg.controller.endpoints)
    _set(fields, "label", cfg.controller.label)

    fleet = cfg.fleet
    _set(fields, "n_switches", fleet.switches)
    _set(topology, "hosts_per_switch", fleet.macs)
    _set(fields, "buffer_size", fleet.buffer_size)
    _set(fields, "flow_table_capacity", fleet.flow_table_capacity)
    if fleet.of_versions is not None:
        fields["of_versions"] = _versions(fleet.of_versions, "fleet.of_versions")
    _set(fields, "strict_matching", fleet.strict_matching)
    _set(fields, "bind_address", fleet.bind_address)
    _set(fields, "handshake_timeout", fleet.handshake_timeout)

    for key, value in cfg.topology.model_dump(exclude_none=True).items():
        topology[key] = value

    _set(traffic, "kind", cfg.traffic.profile)
    _set(traffic, "packet_length", cfg.traffic.packet_length)
    _set(traffic, "weights", cfg.traffic.weights)
    _set(fields, "rate", cfg.traffic.rate)
    _set(fields, "schedule", cfg.traffic.schedule)

    test = cfg.test
    for key, name in (
        ("loops", "loops"),
        ("duration", "test_duration"),
        ("delay", "inter_test_delay"),
        ("warmup", "warmup_loops"),
        ("timeout", "response_timeout"),
        ("seed", "seed"),
        ("cpu_sample_period", "cpu_sample_period"),
        ("variant", "variant"),
        ("pipeline_depth", "pipeline_depth"),
        ("pairs", "pairs"),
        ("link_removal", "link_removal"),
        ("step", "capacity_step"),
        ("hard_cap", "capacity_hard_cap"),
        ("failure_threshold", "capacity_failure_threshold"),
        ("interval", "bucket_interval"),
    ):
        _set(fields, name, getattr(test, key))
    if test.sync is not None:
        fields["message_class"] = MessageClass.SYNC if test.sync else MessageClass.ASYNC

    if topology:
        fields["topology"] = topology
    if traffic:
        fields["traffic"] = traffic
    return fields


def _cli_fields(options: CliOptions, mode: Mode) -> dict[str, Any]:
    for flag, modes in MODE_FLAGS.items():
        if getattr(options, flag) is not None and mode not in modes:
            option = "--" + flag.replace("_", "-")
            raise ConflictingOptions(f"{option} does not apply to {mode.value}", option)

    fields: dict[str, Any] = {}
    topology: dict[str, Any] = {}
    traffic: dict[str, Any] = {}
    _set(fields, "controller_endpoints", options.controller or None)
    _set(fields, "n_switches", options.switches)
    _set(fields, "loops", options.loops)
    _set(fields, "test_duration", options.duration)
    _set(fields, "inter_test_delay", options.delay)
    _set(fields, "warmup_loops", options.warmup)
    _set(fields, "rate", options.rate)
    _set(fields, "schedule", options.schedule)
    _set(fields, "response_timeout", options.timeout)
    _set(fields, "seed", options.seed)
    _set(fields, "label", options.label)
    _set(fields, "variant", options.variant)
    _set(fields, "pipeline_depth", options.pipeline_depth)
    _set(fields, "pairs", options.pairs)
    _set(fields, "capacity_step", options.step)
    _set(fields, "capacity_hard_cap", options.hard_cap)
    _set(fields, "bucket_interval", options.interval)
    if options.strict:
        fields["strict_matching"] = True
    if options.sync:
        fields["message_class"] = MessageClass.SYNC
    if options.no_link_removal:
        fields["link_removal"] = False
    if options.of_version:
        fields["of_versions"] = _versions(options.of_version, "--of-version")
    _set(traffic, "kind", options.profile)
    _set(traffic, "packet_length", options.packet_length)
    _set(topology, "hosts_per_switch", options.macs)
    if options.topology is not None:
        topology.update(parse_topology_flag(options.topology))
    if topology:
        fields["topology"] = topology
    if traffic:
        fields["traffic"] = traffic
    return fields


def _merge(base: dict[str, Any], layer: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in layer.items():
        if key in ("topology", "traffic") and key in merged:
            merged[key] = {**merged[key], **value}
        else:
            merged[key] = value
    return merged


def _check_topology(fields: dict[str, Any], switches_given: bool) -> None:
    """Reconcile ``n_switches`` with topologies that fix their own size."""
    topology = fields.get("topology", {})
    kind = topology.get("kind", TopologyChoice.LINEAR)
    if kind == TopologyChoice.LINEAR and topology.get("switches") is None:
        return
    plan = BenchmarkPlan.model_validate(
        {**fields, "controller_endpoints": ["0.0.0.0:0"], "loops": 2, "warmup_loops": 0}
    )
    try:
        size = build(plan.topology_spec()).size.switches
    except TopologyError as error:
        raise ConfigError(str(error), "topology") from None
    if switches_given and fields["n_switches"] != size:
        raise ConflictingOptions(
            f"the {kind} topology has {size} switches but --switches is "
            f"{fields['n_switches']}",
            "--switches",
        )
    fields["n_switches"] = size


def build_plan(
    mode: Mode,
    options: CliOptions,
    config: ConfigFile | None = None,
    settings: BenchSettings | None = None,
) -> BenchmarkPlan:
    """Layer built-in defaults, preset, config file, environment and flags."""
    settings = settings or BenchSettings()
    fields: dict[str, Any] = {"mode": mode}
    fields = _merge(fields, preset_fields(options.preset))
    if config is not None:
        fields = _merge(fields, _config_fields(config))
    if settings.controller:
        fields["controller_endpoints"] = [settings.controller]
    cli = _cli_fields(options, mode)
    explicit_switches = "n_switches" in cli or (
        config is not None and config.fleet.switches is not None
    )
    fields = _merge(fields, cli)

    if not fields.get("controller_endpoints"):
        raise MissingController(location="--controller")
    # A single loop cannot afford the default warm-up.
    if "warmup_loops" not in fields and fields.get("loops", 20) <= 1:
        fields["warmup_loops"] = 0
    if mode is Mode.TOPOLOGY_CHANGE:
        fields["link_removal"] = True

    try:
        _check_topology(fields, switches_given=explicit_switches)
        return BenchmarkPlan.model_validate(fields)
    except ValidationError as error:
        first = error.errors()[0]
        raise ConfigError(first["msg"], _location("plan", first["loc"])) from None


def parse_sweep(text: str) -> list[int]:
    """``1,2,4,8`` into switch counts."""
    try:
        counts = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"bad switch list '{text}'", "--sweep-switches") from None
    if not counts or any(n < 1 for n in counts):
        raise ConfigError("switch counts must be positive", "--sweep-switches")
    return counts


def oracle_behavior(**fields: Any) -> OracleBehavior:
    """Build an OracleBehavior from ``refctl`` flags, dropping unset ones."""
    given = {key: value for key, value in fields.items() if value is not None}
    if "path_install" in given:
        given["path_install"] = PathInstall(given["path_install"])
    try:
        return OracleBehavior.model_validate(given)
    except ValidationError as error:
        first = error.errors()[0]
        raise ConfigError(first["msg"], _location("refctl", first["loc"])) from None

