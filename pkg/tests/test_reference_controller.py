#!/usr/bin/env python3
"""Tests for the reference controller against emulated switches on loopback."""

import asyncio
import time
from collections.abc import Callable

import pytest

from emulator import Fleet, SessionOptions
from errors import BindFailure, SessionError
from models import OracleBehavior, OracleRole, PathInstall
from openflow.constants import ProtocolVersion
from reference.controller import ReferenceController, serve
from topology import TopologySpec, build, host_mac, linear, single
from traffic import TrafficProfile, next_frame

OPTIONS = SessionOptions(handshake_timeout=2.0)


async def eventually(predicate: Callable[[], bool], timeout: float = 2.0) -> None:
    deadline = time.monotonic() + timeout
    while not predicate():
        if time.monotonic() > deadline:
            raise AssertionError("condition not reached in time")
        await asyncio.sleep(0.005)


def fleet_for(
    spec: TopologySpec, controller: ReferenceController, options: SessionOptions = OPTIONS
) -> Fleet:
    return Fleet(build(spec), [controller.endpoint], options)


def frame(src: bytes, dst: bytes, seq: int = 0) -> bytes:
    return next_frame(TrafficProfile(), src, dst, seq)


@pytest.mark.parametrize("version", [ProtocolVersion.V1_0, ProtocolVersion.V1_3])
async def test_packet_in_gets_flow_mod_and_packet_out(version: ProtocolVersion) -> None:
    options = SessionOptions(versions=(version,), handshake_timeout=2.0)
    async with ReferenceController() as controller:
        async with fleet_for(single(hosts_per_switch=2), controller, options) as fleet:
            [session] = await fleet.start()
            assert session.version is version
            future = session.expect_response()
            await session.inject_packet_in(frame(host_mac(1, 1), host_mac(1, 2)), 1)
            await session.await_response(future, timeout=2.0)

            await eventually(lambda: session.counters.packet_outs_received == 1)
            assert session.counters.flow_mods_received == 1
            # The FlowMod and PacketOut answer one request.
            assert session.counters.responses_received == 1
            assert controller.stats.packet_ins == 1
            assert controller.mac_table[host_mac(1, 1)] == (1, 1)


async def test_echo_is_served_after_the_delay() -> None:
    async with ReferenceController(OracleBehavior(service_delay=0.05)) as controller:
        async with fleet_for(single(hosts_per_switch=1), controller) as fleet:
            [session] = await fleet.start()
            assert await session.measure_echo_rtt(timeout=2.0) >= 0.045
            assert controller.stats.echoes == 1


async def test_drop_schedule_skips_every_nth_request() -> None:
    behavior = OracleBehavior(drop_every_nth=2)
    async with ReferenceController(behavior) as controller:
        async with fleet_for(single(hosts_per_switch=2), controller) as fleet:
            [session] = await fleet.start()
            for seq in range(4):
                await session.inject_packet_in(frame(host_mac(1, 1), host_mac(1, 2), seq), 1)
            await eventually(lambda: controller.stats.packet_ins == 4)
            await eventually(lambda: session.counters.responses_received == 2)
            assert controller.stats.dropped == 2


@pytest.mark.parametrize("cap,accepted", [(0, 0), (1, 1), (2, 2)])
async def test_session_cap_rejects_extra_switches(cap: int, accepted: int) -> None:
    async with ReferenceController(OracleBehavior(session_cap=cap)) as controller:
        async with fleet_for(linear(3, hosts_per_switch=1), controller) as fleet:
            ready = await fleet.start()
            assert len(ready) == accepted
            assert len(fleet.failures) == 3 - accepted
            assert all(isinstance(error, SessionError) for error in fleet.failures.values())
            assert controller.stats.rejected == 3 - accepted


async def test_version_mismatch_fails_every_session() -> None:
    behavior = OracleBehavior(versions=(ProtocolVersion.V1_0,))
    options = SessionOptions(versions=(ProtocolVersion.V1_3,), handshake_timeout=2.0)
    async with ReferenceController(behavior) as controller:
        async with fleet_for(single(hosts_per_switch=1), controller, options) as fleet:
            assert await fleet.start() == []
            assert set(fleet.failures) == {1}


@pytest.mark.parametrize("version", [ProtocolVersion.V1_0, ProtocolVersion.V1_3])
async def test_discovery_sweeps_find_every_link(version: ProtocolVersion) -> None:
    behavior = OracleBehavior(discovery_sweep_period=0.05)
    options = SessionOptions(versions=(version,), handshake_timeout=2.0)
    topology = build(linear(3, hosts_per_switch=1))
    async with ReferenceController(behavior) as controller:
        async with Fleet(topology, [controller.endpoint], options) as fleet:
            await fleet.start()
            expected = set(topology.links())
            await eventually(lambda: expected <= set(controller.links))
            assert controller.stats.probes_sent > 0


async def test_port_status_triggers_rediscovery() -> None:
    behavior = OracleBehavior(discovery_sweep_period=10.0)
    async with ReferenceController(behavior) as controller:
        async with fleet_for(linear(2, hosts_per_switch=1), controller) as fleet:
            await fleet.start()
            await eventually(lambda: ((1, 2), (2, 2)) in controller.links)
            fleet.remove_link((1, 2))
            await eventually(lambda: controller.stats.reprobes == 2)


async def test_hop_by_hop_installs_whole_path() -> None:
    behavior = OracleBehavior(path_install=PathInstall.HOP_BY_HOP, per_hop_delay=0.01)
    topology = build(linear(3, hosts_per_switch=1))
    async with ReferenceController(behavior, topology) as controller:
        async with Fleet(topology, [controller.endpoint], OPTIONS) as fleet:
            await fleet.start()
            ingress = fleet.sessions[1]
            await ingress.inject_packet_in(frame(host_mac(1, 1), host_mac(3, 1)), 1)
            await ingress.wait_response(timeout=2.0)
            await eventually(
                lambda: all(len(s.flow_table) == 1 for s in fleet.sessions.values())
            )
            assert controller.stats.flow_mods == 3


async def test_edge_only_skips_transit_switches() -> None:
    behavior = OracleBehavior(path_install=PathInstall.EDGE_ONLY)
    topology = build(linear(3, hosts_per_switch=1))
    async with ReferenceController(behavior, topology) as controller:
        async with Fleet(topology, [controller.endpoint], OPTIONS) as fleet:
            await fleet.start()
            ingress = fleet.sessions[1]
            await ingress.inject_packet_in(frame(host_mac(1, 1), host_mac(3, 1)), 1)
            await ingress.wait_response(timeout=2.0)
            await eventually(lambda: len(fleet.sessions[3].flow_table) == 1)
            assert len(fleet.sessions[2].flow_table) == 0
            assert controller.stats.flow_mods == 2


async def test_backup_delays_its_first_message() -> None:
    behavior = OracleBehavior(role=OracleRole.BACKUP, first_response_delay=0.1)
    async with ReferenceController(behavior) as controller:
        async with fleet_for(single(hosts_per_switch=1), controller) as fleet:
            [session] = await fleet.start()
            settled = await session.wait_settled(timeout=2.0)
            assert session.ready_at is not None
            assert settled - session.ready_at >= 0.09


async def test_fail_over_reaches_the_backup() -> None:
    backup_behavior = OracleBehavior(role=OracleRole.BACKUP, first_response_delay=0.05)
    async with ReferenceController() as primary, ReferenceController(backup_behavior) as backup:
        endpoints = [primary.endpoint, backup.endpoint]
        async with Fleet(build(single(hosts_per_switch=1)), endpoints, OPTIONS) as fleet:
            [session] = await fleet.start()
            took = await session.fail_over()
            assert took >= 0.045
            assert session.is_ready
            assert backup.stats.accepted == 1


async def test_serve_parses_listen_address() -> None:
    controller = await serve(OracleBehavior(), "127.0.0.1:0")
    try:
        assert controller.port > 0
        assert controller.endpoint == f"127.0.0.1:{controller.port}"
        with pytest.raises(BindFailure):
            await serve(OracleBehavior(), controller.endpoint)
    finally:
        await controller.close()
