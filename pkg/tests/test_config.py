#!/usr/bin/env python3
"""Tests for config files, settings and plan layering."""

import logging
from pathlib import Path

import pytest

from config import (
    BenchSettings,
    CliOptions,
    Preset,
    build_plan,
    load_config,
    oracle_behavior,
    parse_config,
    parse_sweep,
    parse_topology_flag,
    setup_logging,
)
from errors import ConfigError, ConflictingOptions, MissingController
from models import (
    LatencyVariant,
    MessageClass,
    Mode,
    OracleRole,
    PathInstall,
    TopologyChoice,
)
from openflow.constants import ProtocolVersion
from traffic import ProfileKind

ENDPOINT = "127.0.0.1:6653"
NO_ENV = BenchSettings(controller=None)


def options(**fields: object) -> CliOptions:
    return CliOptions(controller=[ENDPOINT], **fields)  # type: ignore[arg-type]


@pytest.mark.parametrize(
    "document,location",
    [
        (b'[fleet]\nswitches = "many"\n', "<config>:fleet.switches"),
        (b"[fleet]\nbogus = 1\n", "<config>:fleet.bogus"),
        (b"[extra]\nkey = 1\n", "<config>:extra"),
        (b'[traffic]\nprofile = "icmp"\n', "<config>:traffic.profile"),
        (b"[fleet\n", "<config>"),
        (b"\xff\xfe[fleet]\n", "<config>"),
    ],
)
def test_config_errors_name_their_location(document: bytes, location: str) -> None:
    with pytest.raises(ConfigError) as info:
        parse_config(document)
    assert info.value.location == location


def test_non_utf8_config_reports_the_byte() -> None:
    with pytest.raises(ConfigError, match="not UTF-8 at byte 2"):
        parse_config(b"# \xc3\x28\n")


def test_load_config_missing_file(tmp_path: Path) -> None:
    path = tmp_path / "missing.toml"
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.location == str(path)


def test_config_file_sections(tmp_path: Path) -> None:
    path = tmp_path / "bench.toml"
    path.write_text(
        "[controller]\n"
        'endpoints = ["10.0.0.1:6653", "10.0.0.2:6653"]\n'
        'label = "onos"\n'
        "[fleet]\n"
        "switches = 4\n"
        "macs = 8\n"
        'of_versions = ["1.0"]\n'
        "[traffic]\n"
        'profile = "udp"\n'
        "rate = 50.0\n"
        "[test]\n"
        "loops = 3\n"
        "sync = true\n"
        "[report]\n"
        'out_dir = "out"\n',
        encoding="utf-8",
    )
    config = load_config(path)
    plan = build_plan(Mode.LATENCY, CliOptions(), config, NO_ENV)
    assert plan.controller_endpoints == ["10.0.0.1:6653", "10.0.0.2:6653"]
    assert plan.label == "onos"
    assert plan.n_switches == 4
    assert plan.topology.hosts_per_switch == 8
    assert plan.of_versions == (ProtocolVersion.V1_0,)
    assert plan.traffic.kind is ProfileKind.UDP
    assert plan.rate == 50.0
    assert plan.loops == 3
    assert plan.message_class is MessageClass.SYNC
    assert config.report.out_dir == Path("out")


def test_flags_beat_environment_beat_config() -> None:
    config = parse_config(b'[controller]\nendpoints = ["10.0.0.1:1"]\n[test]\nloops = 7\n')
    from_config = build_plan(Mode.RTT, CliOptions(), config, NO_ENV)
    assert from_config.controller_endpoints == ["10.0.0.1:1"]
    assert from_config.loops == 7

    env = BenchSettings(controller="10.0.0.2:2")
    from_env = build_plan(Mode.RTT, CliOptions(), config, env)
    assert from_env.controller_endpoints == ["10.0.0.2:2"]

    flags = CliOptions(controller=["10.0.0.3:3"], loops=9)
    from_flags = build_plan(Mode.RTT, flags, config, env)
    assert from_flags.controller_endpoints == ["10.0.0.3:3"]
    assert from_flags.loops == 9


def test_settings_read_the_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("SDNBENCH_CONTROLLER", "192.0.2.1:6653")
    monkeypatch.setenv("SDNBENCH_LOG_LEVEL", "debug")
    settings = BenchSettings()
    assert settings.controller == "192.0.2.1:6653"
    assert settings.log_level == "debug"
    assert settings.out_dir == Path("results")


def test_default_plan() -> None:
    plan = build_plan(Mode.LATENCY, options(), settings=NO_ENV)
    assert plan.loops == 20
    assert plan.warmup_loops == 1
    assert plan.test_duration == 300.0
    assert plan.inter_test_delay == 2.0
    assert plan.n_switches == 16
    assert plan.topology.hosts_per_switch == 64
    assert plan.traffic.packet_length == 64
    assert plan.rate == 100.0


def test_presets_yield_to_explicit_values() -> None:
    pktblaster = build_plan(
        Mode.THROUGHPUT, options(preset=Preset.PKTBLASTER, switches=8), settings=NO_ENV
    )
    assert pktblaster.loops == 5
    assert pktblaster.traffic.kind is ProfileKind.TCP
    assert pktblaster.n_switches == 8

    config = parse_config(b"[test]\nloops = 8\n")
    overridden = build_plan(
        Mode.THROUGHPUT, options(preset=Preset.PKTBLASTER), config, NO_ENV
    )
    assert overridden.loops == 8


def test_ofnet_preset_fixes_the_switch_count() -> None:
    plan = build_plan(Mode.PATH_PROVISION, options(preset=Preset.OFNET), settings=NO_ENV)
    assert plan.topology.kind is TopologyChoice.OFNET
    assert plan.n_switches == 7
    assert plan.traffic.kind is ProfileKind.MIXED_APP
    with pytest.raises(ConflictingOptions):
        build_plan(Mode.PATH_PROVISION, options(preset=Preset.OFNET, switches=8), settings=NO_ENV)


def test_tree_topology_sets_switch_count() -> None:
    plan = build_plan(Mode.RTT, options(topology="tree:2,3"), settings=NO_ENV)
    assert plan.n_switches == 4
    assert (plan.topology.depth, plan.topology.fanout) == (2, 3)


def test_custom_topology_from_config() -> None:
    config = parse_config(b'[topology]\nkind = "custom"\nlinks = [[1, 1, 2, 1]]\n')
    plan = build_plan(Mode.RTT, options(), config, NO_ENV)
    assert plan.n_switches == 2

    broken = parse_config(
        b'[topology]\nkind = "custom"\ncustom_switches = [1, 2, 3]\nlinks = [[1, 1, 2, 1]]\n'
    )
    with pytest.raises(ConfigError) as info:
        build_plan(Mode.RTT, options(), broken, NO_ENV)
    assert info.value.location == "topology"


@pytest.mark.parametrize(
    "text,fields",
    [
        ("linear", {"kind": TopologyChoice.LINEAR}),
        ("OFNET", {"kind": TopologyChoice.OFNET}),
        ("tree:3,2", {"kind": TopologyChoice.TREE, "depth": 3, "fanout": 2}),
    ],
)
def test_parse_topology_flag(text: str, fields: dict[str, object]) -> None:
    assert parse_topology_flag(text) == fields


@pytest.mark.parametrize("text", ["ring", "custom", "linear:3", "tree:2", "tree:a,b"])
def test_parse_topology_flag_rejects(text: str) -> None:
    with pytest.raises(ConfigError):
        parse_topology_flag(text)


def test_missing_controller() -> None:
    with pytest.raises(MissingController):
        build_plan(Mode.LATENCY, CliOptions(), settings=NO_ENV)


@pytest.mark.parametrize(
    "mode,fields,option",
    [
        (Mode.THROUGHPUT, {"variant": LatencyVariant.PIPELINED}, "--variant"),
        (Mode.RTT, {"sync": True}, "--sync"),
        (Mode.LATENCY, {"pairs": 3}, "--pairs"),
        (Mode.TOPOLOGY_CHANGE, {"no_link_removal": True}, "--no-link-removal"),
        (Mode.LATENCY, {"hard_cap": 10}, "--hard-cap"),
    ],
)
def test_mode_flags_must_match_the_mode(
    mode: Mode, fields: dict[str, object], option: str
) -> None:
    with pytest.raises(ConflictingOptions) as info:
        build_plan(mode, options(**fields), settings=NO_ENV)
    assert info.value.location == option


def test_single_loop_drops_warmup() -> None:
    assert build_plan(Mode.RTT, options(loops=1), settings=NO_ENV).warmup_loops == 0


def test_topology_change_always_removes_a_link() -> None:
    config = parse_config(b"[test]\nlink_removal = false\n")
    plan = build_plan(Mode.TOPOLOGY_CHANGE, options(), config, NO_ENV)
    assert plan.link_removal


@pytest.mark.parametrize(
    "fields,location",
    [
        ({"loops": 0}, "plan:loops"),
        ({"loops": 2, "warmup": 2}, "plan"),
        ({"switches": 0x10000}, "plan:n_switches"),
    ],
)
def test_invalid_plan_values(fields: dict[str, object], location: str) -> None:
    with pytest.raises(ConfigError) as info:
        build_plan(Mode.RTT, options(**fields), settings=NO_ENV)
    assert info.value.location == location


def test_of_versions() -> None:
    plan = build_plan(Mode.RTT, options(of_version=["1.0", "1.3"]), settings=NO_ENV)
    assert plan.of_versions == (ProtocolVersion.V1_3, ProtocolVersion.V1_0)
    with pytest.raises(ConfigError) as info:
        build_plan(Mode.RTT, options(of_version=["2.0"]), settings=NO_ENV)
    assert info.value.location == "--of-version"


def test_parse_sweep() -> None:
    assert parse_sweep("1, 2,4,8") == [1, 2, 4, 8]
    for bad in ("a,b", "0,1", ""):
        with pytest.raises(ConfigError):
            parse_sweep(bad)


def test_oracle_behavior_drops_unset_flags() -> None:
    behavior = oracle_behavior(
        service_delay=None, rate_cap=50.0, path_install="hop_by_hop", role=OracleRole.BACKUP
    )
    assert behavior.service_delay == 0.0
    assert behavior.rate_cap == 50.0
    assert behavior.path_install is PathInstall.HOP_BY_HOP
    assert behavior.role is OracleRole.BACKUP
    with pytest.raises(ConfigError) as info:
        oracle_behavior(rate_cap=-1.0)
    assert info.value.location == "refctl:rate_cap"


@pytest.mark.parametrize(
    "level,verbose,expected",
    [("warning", False, logging.WARNING), ("INFO", False, logging.INFO), ("error", True, 10)],
)
def test_setup_logging(level: str, verbose: bool, expected: int) -> None:
    setup_logging(level, verbose)
    assert logging.getLogger().level == expected
