#!/usr/bin/env python3
"""End-to-end benchmark runs against the reference controller on loopback."""

import asyncio
from collections.abc import Awaitable, Callable
from typing import Any

import pytest

from benchmarks.base import flow_source
from benchmarks.discovery import DiscoveryBenchmark
from benchmarks.failover import FailoverBenchmark
from benchmarks.latency import LatencyBenchmark
from benchmarks.path_provision import PathTracker
from benchmarks.runner import (
    create_benchmark,
    run_benchmark,
    run_latency,
    run_rtt,
    run_throughput,
)
from emulator import Fleet, ResponseEvent
from errors import ControllerUnreachable, DiscoveryTimeout, NoBackupEndpoint
from models import (
    BenchmarkPlan,
    CapacityPayload,
    DiscoveryPayload,
    FailoverPayload,
    FlowQualityPayload,
    IterationResult,
    LatencyPayload,
    LatencyVariant,
    MessageClass,
    Mode,
    OracleBehavior,
    OracleRole,
    PathInstall,
    PathProvisionPayload,
    RttPayload,
    ThroughputPayload,
    TopologyPlan,
)
from openflow.constants import FlowModCommand, MessageKind, ProtocolVersion
from openflow.messages import FlowMod, PacketIn, build_match
from reference.controller import OracleSession, ReferenceController
from topology import build, host_mac, ofnet
from traffic import ProfileKind, TrafficProfile, app_servers, pick_app

SMALL_LINEAR = TopologyPlan(hosts_per_switch=2)


def make_plan(mode: Mode, endpoints: list[str], **overrides: Any) -> BenchmarkPlan:
    fields: dict[str, Any] = {
        "mode": mode,
        "controller_endpoints": endpoints,
        "n_switches": 2,
        "loops": 2,
        "warmup_loops": 1,
        "test_duration": 0.2,
        "inter_test_delay": 0.0,
        "response_timeout": 0.5,
        "handshake_timeout": 2.0,
        "cpu_sample_period": 0.05,
        "topology": SMALL_LINEAR,
    }
    fields.update(overrides)
    return BenchmarkPlan.model_validate(fields)


async def dead_endpoint() -> str:
    server = await asyncio.start_server(lambda r, w: None, "127.0.0.1", 0)
    port = server.sockets[0].getsockname()[1]
    server.close()
    await server.wait_closed()
    return f"127.0.0.1:{port}"


def measured(results: list[IterationResult]) -> IterationResult:
    assert [result.warmup for result in results] == [True, False]
    assert not any(result.failed for result in results), [r.error for r in results]
    return results[-1]


@pytest.mark.parametrize(
    "overrides",
    [
        {},
        {"variant": LatencyVariant.PIPELINED, "pipeline_depth": 4},
        {"message_class": MessageClass.SYNC},
    ],
)
async def test_latency_sees_the_injected_delay(overrides: dict[str, Any]) -> None:
    async with ReferenceController(OracleBehavior(service_delay=0.01)) as controller:
        plan = make_plan(Mode.LATENCY, [controller.endpoint], **overrides)
        payload = measured(await run_benchmark(plan)).payload

    assert isinstance(payload, LatencyPayload)
    assert payload.samples
    assert set(payload.per_switch_mean) == {1, 2}
    assert min(payload.samples) >= 0.009


async def test_throughput_respects_the_rate_cap() -> None:
    async with ReferenceController(OracleBehavior(rate_cap=200.0)) as controller:
        plan = make_plan(Mode.THROUGHPUT, [controller.endpoint], test_duration=0.5)
        payload = measured(await run_benchmark(plan)).payload

    assert isinstance(payload, ThroughputPayload)
    assert payload.responses > 0
    assert 0 < payload.fleet_rate < 300
    assert payload.fleet_rate == pytest.approx(sum(payload.per_switch_rate.values()))


async def test_silent_controller_has_zero_throughput() -> None:
    async with ReferenceController(OracleBehavior(drop_every_nth=1)) as controller:
        plan = make_plan(Mode.THROUGHPUT, [controller.endpoint])
        result = measured(await run_benchmark(plan))

    assert isinstance(result.payload, ThroughputPayload)
    assert result.payload.responses == 0
    assert result.payload.fleet_rate == 0
    assert set(result.payload.per_switch_rate) == {1, 2}
    assert all(c.packet_in_sent > 0 for c in result.counters)


async def test_sync_throughput_counts_echo_replies() -> None:
    async with ReferenceController() as controller:
        plan = make_plan(
            Mode.THROUGHPUT, [controller.endpoint], message_class=MessageClass.SYNC
        )
        result = measured(await run_benchmark(plan))

    assert isinstance(result.payload, ThroughputPayload)
    assert result.payload.responses == sum(c.sync_replies_received for c in result.counters)


async def test_path_provision_with_hop_by_hop_install() -> None:
    topology_plan = TopologyPlan(hosts_per_switch=1)
    plan_fields = {"n_switches": 3, "topology": topology_plan}
    topology = build(topology_plan.to_spec(3))
    behavior = OracleBehavior(path_install=PathInstall.HOP_BY_HOP)
    async with ReferenceController(behavior, topology) as controller:
        plan = make_plan(Mode.PATH_PROVISION, [controller.endpoint], **plan_fields)
        payload = measured(await run_benchmark(plan)).payload

    assert isinstance(payload, PathProvisionPayload)
    assert payload.pairs_tried == 6
    assert payload.timeouts == 0
    assert len(payload.provision_times) == 6
    assert payload.provision_rate > 0


async def test_edge_only_install_times_out_across_transit_switches() -> None:
    topology_plan = TopologyPlan(hosts_per_switch=1)
    topology = build(topology_plan.to_spec(3))
    behavior = OracleBehavior(path_install=PathInstall.EDGE_ONLY)
    async with ReferenceController(behavior, topology) as controller:
        plan = make_plan(
            Mode.PATH_PROVISION,
            [controller.endpoint],
            n_switches=3,
            topology=topology_plan,
            response_timeout=0.2,
        )
        payload = measured(await run_benchmark(plan)).payload

    assert isinstance(payload, PathProvisionPayload)
    # s1 <-> s3 needs s2, which edge-only installation never programs.
    assert payload.timeouts == 2
    assert len(payload.provision_times) == 4


async def test_path_provision_fails_when_no_path_completes() -> None:
    async with ReferenceController() as controller:
        plan = make_plan(
            Mode.PATH_PROVISION,
            [controller.endpoint],
            topology=TopologyPlan(hosts_per_switch=1),
            response_timeout=0.1,
        )
        results = await run_benchmark(plan)

    assert all(result.failed for result in results)
    assert all((result.error or "").startswith("ProvisionTimeout") for result in results)
    assert all(result.headline is None for result in results)


async def test_path_tracker_ignores_deletes() -> None:
    topology = build(TopologyPlan(hosts_per_switch=1).to_spec(2))
    src, dst = host_mac(1, 1), host_mac(2, 1)
    tracker = PathTracker(topology, src, dst)
    v13 = ProtocolVersion.V1_3

    flush = FlowMod(build_match(v13), command=FlowModCommand.DELETE)
    for dpid in (1, 2):
        tracker.record(dpid, ResponseEvent(1.0, None, MessageKind.FLOW_MOD, flush))
    assert not tracker.done.done()
    assert not tracker.installed

    install = FlowMod(build_match(v13, eth_src=src, eth_dst=dst), command=FlowModCommand.ADD)
    for dpid in (1, 2):
        tracker.record(dpid, ResponseEvent(2.0, None, MessageKind.FLOW_MOD, install))
    assert tracker.done.result() == 2.0


async def test_mixed_app_flows_reach_the_ofnet_servers() -> None:
    topology = build(ofnet())
    servers = app_servers(topology.hosts)
    fleet = Fleet(topology, ["127.0.0.1:6653"])
    profile = TrafficProfile(kind=ProfileKind.MIXED_APP)

    targeted: set[bytes] = set()
    crossing = 0
    for dpid, session in fleet.sessions.items():
        if not topology.hosts_on(dpid):
            continue
        source = flow_source(session, profile, topology)
        for seq in range(100):
            src, dst = source.pair(seq)
            server = servers.get(pick_app(profile.weights, seq))
            if server is not None and server != src:
                assert dst == server
                targeted.add(dst)
            if topology.host(src).attached[0] != topology.host(dst).attached[0]:
                crossing += 1

    assert targeted == set(servers.values())
    assert crossing > 0


async def test_discovery_without_link_removal() -> None:
    async with ReferenceController(OracleBehavior(discovery_sweep_period=0.05)) as controller:
        plan = make_plan(
            Mode.TOPOLOGY_DISCOVERY,
            [controller.endpoint],
            n_switches=3,
            test_duration=2.0,
            link_removal=False,
        )
        payload = measured(await run_benchmark(plan)).payload

    assert isinstance(payload, DiscoveryPayload)
    assert payload.switches == 3
    assert payload.links == 4
    assert all(payload.probed.values())
    assert payload.change_time is None
    assert payload.headline == payload.discovery_time


async def test_topology_change_measures_rediscovery() -> None:
    async with ReferenceController(OracleBehavior(discovery_sweep_period=0.05)) as controller:
        plan = make_plan(Mode.TOPOLOGY_CHANGE, [controller.endpoint], test_duration=2.0)
        payload = measured(await run_benchmark(plan)).payload

    assert isinstance(payload, DiscoveryPayload)
    assert payload.mode == "topology_change"
    assert payload.change_time is not None
    assert payload.headline == payload.change_time


async def test_suppressed_link_times_out_discovery() -> None:
    def suppress(fleet: Fleet) -> None:
        fleet.suppress((1, 3))

    async with ReferenceController(OracleBehavior(discovery_sweep_period=0.05)) as controller:
        plan = make_plan(Mode.TOPOLOGY_DISCOVERY, [controller.endpoint], test_duration=0.3)
        with pytest.raises(DiscoveryTimeout) as info:
            await DiscoveryBenchmark(plan, fleet_hook=suppress).iteration()

    assert info.value.missing == ["s1:3->s2:3"]
    assert info.value.probed["s2:3->s1:3"]


async def test_failover_times_the_backup() -> None:
    backup_behavior = OracleBehavior(role=OracleRole.BACKUP, first_response_delay=0.05)
    async with ReferenceController() as primary, ReferenceController(backup_behavior) as backup:
        plan = make_plan(Mode.FAILOVER, [primary.endpoint, backup.endpoint])
        payload = measured(await run_benchmark(plan)).payload

    assert isinstance(payload, FailoverPayload)
    assert set(payload.switchover) == {1, 2}
    assert payload.fleet_max >= 0.045
    assert payload.fleet_max == max(payload.switchover.values())


def test_failover_needs_a_backup_endpoint() -> None:
    with pytest.raises(NoBackupEndpoint):
        FailoverBenchmark(make_plan(Mode.FAILOVER, ["127.0.0.1:6653"]))


@pytest.mark.parametrize(
    "session_cap,capacity,hard_cap_reached",
    [(5, 4, False), (None, 6, True)],
)
async def test_session_capacity_ramp(
    session_cap: int | None, capacity: int, hard_cap_reached: bool
) -> None:
    async with ReferenceController(OracleBehavior(session_cap=session_cap)) as controller:
        plan = make_plan(
            Mode.SESSION_CAPACITY,
            [controller.endpoint],
            loops=1,
            warmup_loops=0,
            capacity_step=2,
            capacity_hard_cap=6,
            capacity_failure_threshold=0.0,
        )
        [result] = await run_benchmark(plan)

    payload = result.payload
    assert isinstance(payload, CapacityPayload)
    assert payload.capacity == capacity
    assert payload.reached_hard_cap is hard_cap_reached


async def test_unreachable_controller_has_zero_capacity() -> None:
    plan = make_plan(
        Mode.SESSION_CAPACITY, [await dead_endpoint()], loops=1, warmup_loops=0
    )
    [result] = await run_benchmark(plan)
    assert isinstance(result.payload, CapacityPayload)
    assert result.payload.capacity == 0


@pytest.mark.parametrize("drop_every", [None, 2])
async def test_flow_quality_accounts_for_every_flow(drop_every: int | None) -> None:
    behavior = OracleBehavior(drop_every_nth=drop_every)
    async with ReferenceController(behavior) as controller:
        plan = make_plan(
            Mode.FLOW_QUALITY,
            [controller.endpoint],
            rate=200.0,
            test_duration=0.3,
            response_timeout=0.2,
            bucket_interval=0.1,
        )
        payload = measured(await run_benchmark(plan)).payload

    assert isinstance(payload, FlowQualityPayload)
    assert 55 <= payload.sent <= 61
    assert payload.sent == payload.received + payload.missed
    assert sum(bucket.sent for bucket in payload.buckets) == payload.sent
    assert sum(bucket.missed for bucket in payload.buckets) == payload.missed
    assert len(payload.setup_latencies) == payload.received
    if drop_every is None:
        assert payload.missed == 0
    else:
        assert abs(payload.missed - payload.received) <= 2


async def test_rtt_per_switch() -> None:
    async with ReferenceController() as controller:
        plan = make_plan(Mode.RTT, [controller.endpoint])
        payload = measured(await run_benchmark(plan)).payload

    assert isinstance(payload, RttPayload)
    assert payload.samples
    assert set(payload.per_switch_mean) == {1, 2}


async def test_progress_sees_every_iteration() -> None:
    seen: list[int] = []
    async with ReferenceController() as controller:
        plan = make_plan(Mode.RTT, [controller.endpoint], loops=3)
        await run_benchmark(plan, progress=lambda result: seen.append(result.index))
    assert seen == [0, 1, 2]


@pytest.mark.parametrize(
    "mode,entry_point",
    [(Mode.RTT, run_rtt), (Mode.LATENCY, run_latency), (Mode.THROUGHPUT, run_throughput)],
)
async def test_mode_entry_points(
    mode: Mode, entry_point: Callable[[BenchmarkPlan], Awaitable[list[IterationResult]]]
) -> None:
    async with ReferenceController() as controller:
        result = measured(await entry_point(make_plan(mode, [controller.endpoint])))
    assert result.payload is not None
    assert result.payload.mode == mode.value


async def test_unreachable_controller_aborts_the_run() -> None:
    plan = make_plan(Mode.LATENCY, [await dead_endpoint()])
    with pytest.raises(ControllerUnreachable):
        await run_benchmark(plan)


async def test_controller_hangup_fails_the_iteration(monkeypatch: pytest.MonkeyPatch) -> None:
    async def hang_up(self: OracleSession, packet_in: PacketIn) -> None:
        self.close()

    monkeypatch.setattr(OracleSession, "_serve_packet_in", hang_up)
    async with ReferenceController() as controller:
        results = await run_benchmark(make_plan(Mode.LATENCY, [controller.endpoint]))

    assert len(results) == 2
    assert all(result.failed for result in results)
    assert all((result.error or "").startswith("ConnectRefused") for result in results)


def test_benchmark_rejects_plans_of_other_modes() -> None:
    with pytest.raises(ValueError):
        LatencyBenchmark(make_plan(Mode.RTT, ["127.0.0.1:6653"]))
    assert isinstance(
        create_benchmark(make_plan(Mode.TOPOLOGY_CHANGE, ["127.0.0.1:6653"])),
        DiscoveryBenchmark,
    )
