#!/usr/bin/env python3
"""Tests for synthetic frames, discovery probes and arrival streams."""

import itertools
import struct
from collections import Counter

import pytest
from pydantic import ValidationError

from errors import LengthTooSmall
from openflow.constants import ETH_TYPE_ARP, ETH_TYPE_BDDP, ETH_TYPE_IPV4
from topology import build, host_mac, ofnet
from traffic import (
    LARGE_SEND_LENGTH,
    ArrivalSpec,
    FlowSource,
    MixedApp,
    ProfileKind,
    Schedule,
    TrafficProfile,
    app_servers,
    arrival_stream,
    eth_addresses,
    eth_type_of,
    lldp_frame,
    next_frame,
    parse_lldp,
    pick_app,
)

SRC = host_mac(1, 1)
DST = host_mac(2, 1)


def ones_complement_sum(data: bytes) -> int:
    if len(data) % 2:
        data += b"\0"
    total = sum(struct.unpack(f"!{len(data) // 2}H", data))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return total


@pytest.mark.parametrize(
    "kind,length,proto",
    [
        (ProfileKind.TCP, 64, 6),
        (ProfileKind.TCP, 1500, 6),
        (ProfileKind.UDP, 64, 17),
        (ProfileKind.UDP, 42, 17),
    ],
)
def test_ipv4_frames_are_well_formed(kind: ProfileKind, length: int, proto: int) -> None:
    frame = next_frame(TrafficProfile(kind=kind, packet_length=length), SRC, DST, 7)
    assert len(frame) == length
    assert eth_type_of(frame) == ETH_TYPE_IPV4
    assert eth_addresses(frame) == (SRC, DST)

    ip_header = frame[14:34]
    assert ip_header[9] == proto
    assert int.from_bytes(ip_header[2:4], "big") == length - 14
    assert ones_complement_sum(ip_header) == 0xFFFF

    segment = frame[34:]
    pseudo = ip_header[12:20] + struct.pack("!BBH", 0, proto, len(segment))
    assert ones_complement_sum(pseudo + segment) == 0xFFFF


@pytest.mark.parametrize(
    "kind,eth_dst,opcode",
    [
        (ProfileKind.ARP_REQUEST, b"\xff" * 6, 1),
        (ProfileKind.ARP_REPLY, DST, 2),
    ],
)
def test_arp_frames(kind: ProfileKind, eth_dst: bytes, opcode: int) -> None:
    frame = next_frame(TrafficProfile(kind=kind), SRC, DST, 0)
    assert len(frame) == 64
    assert eth_type_of(frame) == ETH_TYPE_ARP
    assert frame[0:6] == eth_dst
    assert int.from_bytes(frame[20:22], "big") == opcode


def test_frames_are_deterministic() -> None:
    profile = TrafficProfile(kind=ProfileKind.MIXED_APP)
    first = [next_frame(profile, SRC, DST, seq) for seq in range(50)]
    again = [next_frame(profile, SRC, DST, seq) for seq in range(50)]
    assert first == again
    assert len(set(first)) == 50


@pytest.mark.parametrize(
    "kind,length",
    [
        (ProfileKind.TCP, 53),
        (ProfileKind.UDP, 41),
        (ProfileKind.ARP_REQUEST, 41),
    ],
)
def test_profile_rejects_short_frames(kind: ProfileKind, length: int) -> None:
    with pytest.raises(ValidationError):
        TrafficProfile(kind=kind, packet_length=length)


def test_next_frame_rejects_short_frames() -> None:
    profile = TrafficProfile.model_construct(kind=ProfileKind.TCP, packet_length=40)
    with pytest.raises(LengthTooSmall):
        next_frame(profile, SRC, DST, 0)


def test_mixed_app_weights_must_sum_to_one() -> None:
    with pytest.raises(ValidationError):
        TrafficProfile(kind=ProfileKind.MIXED_APP, weights={MixedApp.DNS: 0.5})


def test_pick_app_follows_weights() -> None:
    weights = {app: 1 / len(MixedApp) for app in MixedApp}
    counts = Counter(pick_app(weights, seq) for seq in range(8000))
    assert set(counts) == set(MixedApp)
    for count in counts.values():
        assert abs(count - 1000) < 50


def test_single_application_mix() -> None:
    profile = TrafficProfile(kind=ProfileKind.MIXED_APP, weights={MixedApp.DNS: 1.0})
    for seq in range(20):
        frame = next_frame(profile, SRC, DST, seq)
        assert frame[23] == 17
        assert int.from_bytes(frame[36:38], "big") == 53


def test_large_send_and_multicast_apps() -> None:
    large = TrafficProfile(kind=ProfileKind.MIXED_APP, weights={MixedApp.LARGE_SEND: 1.0})
    assert len(next_frame(large, SRC, DST, 1)) == LARGE_SEND_LENGTH

    multicast = TrafficProfile(kind=ProfileKind.MIXED_APP, weights={MixedApp.MULTICAST: 1.0})
    frame = next_frame(multicast, SRC, DST, 1)
    assert frame[30:32] == bytes([239, 1])


@pytest.mark.parametrize("dpid,port", [(1, 1), (5, 3), (0xABCD, 48)])
def test_lldp_frame_names_its_origin(dpid: int, port: int) -> None:
    assert parse_lldp(lldp_frame(dpid, port)) == (dpid, port)
    assert parse_lldp(lldp_frame(dpid, port, ETH_TYPE_BDDP)) == (dpid, port)


def test_parse_lldp_ignores_other_frames() -> None:
    frame = next_frame(TrafficProfile(), SRC, DST, 0)
    assert parse_lldp(frame) is None
    assert parse_lldp(b"") is None


@pytest.mark.parametrize(
    "rate,duration,count",
    [(100.0, 1.0, 100), (3.0, 1.0, 3), (10.0, 0.25, 3), (1000.0, 2.0, 2000)],
)
def test_uniform_arrivals(rate: float, duration: float, count: int) -> None:
    arrivals = list(arrival_stream(ArrivalSpec(rate=rate, duration=duration)))
    assert len(arrivals) == count
    assert arrivals[0] == (0.0, 0)
    assert [seq for _, seq in arrivals] == list(range(count))
    assert arrivals[1][0] == pytest.approx(1 / rate)


def test_poisson_arrivals_are_seeded_and_bounded() -> None:
    spec = ArrivalSpec(rate=1000.0, duration=10.0, schedule=Schedule.POISSON)
    arrivals = list(arrival_stream(spec, seed=3))
    assert arrivals == list(arrival_stream(spec, seed=3))
    assert all(offset < 10.0 for offset, _ in arrivals)
    assert abs(len(arrivals) - 10_000) < 400


@pytest.mark.parametrize("schedule", [Schedule.AS_FAST_AS_POSSIBLE, Schedule.SERIAL_LOCKSTEP])
def test_unpaced_arrivals_are_unbounded(schedule: Schedule) -> None:
    stream = arrival_stream(ArrivalSpec(rate=1.0, duration=0.1, schedule=schedule))
    assert list(itertools.islice(stream, 5)) == [(0.0, seq) for seq in range(5)]


def test_flow_source_walks_the_pool() -> None:
    pool = [host_mac(1, index) for index in range(1, 4)]
    source = FlowSource(TrafficProfile(), pool)
    pairs = [source.pair(seq) for seq in range(9)]
    assert [src for src, _ in pairs] == pool * 3
    assert all(src != dst and dst in pool for src, dst in pairs)


def test_flow_source_with_one_address() -> None:
    source = FlowSource(TrafficProfile(), [SRC])
    src, dst, frame = source.frame(5)
    assert src == SRC
    assert dst == host_mac(0xFFFF, 5)
    assert eth_addresses(frame) == (SRC, dst)


def test_ofnet_servers_per_application() -> None:
    hosts = build(ofnet()).hosts
    assert app_servers(hosts) == {
        MixedApp.DNS: hosts[1].mac,
        MixedApp.NFS: hosts[11].mac,
        MixedApp.MULTICAST: hosts[19].mac,
    }


@pytest.mark.parametrize(
    "kind,served",
    [(ProfileKind.MIXED_APP, True), (ProfileKind.TCP, False)],
)
def test_flow_source_routes_served_apps(kind: ProfileKind, served: bool) -> None:
    server = host_mac(3, 1)
    pool = [SRC, host_mac(1, 2)]
    profile = TrafficProfile(kind=kind)
    source = FlowSource(profile, pool, servers={MixedApp.DNS: server})
    dns_flows = [seq for seq in range(64) if pick_app(profile.weights, seq) is MixedApp.DNS]
    assert dns_flows
    for seq in dns_flows:
        assert (source.pair(seq)[1] == server) is served


def test_flow_source_needs_addresses() -> None:
    with pytest.raises(ValueError):
        FlowSource(TrafficProfile(), [])
