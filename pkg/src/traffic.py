"""
Synthetic traffic for PacketIn payloads.

Frames are pure functions of (profile, source MAC, destination MAC, sequence
number). Arrival streams turn a rate and duration into emission offsets.
"""

import math
import random
import struct
from collections.abc import Iterable, Iterator, Mapping, Sequence
from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from errors import LengthTooSmall
from openflow.constants import DISCOVERY_ETH_TYPES, ETH_TYPE_ARP, ETH_TYPE_IPV4, ETH_TYPE_LLDP
from topology import HostRole, HostSpec, PortRef, host_mac

ETH_HEADER_LEN = 14
IPV4_HEADER_LEN = 20
BROADCAST_MAC = b"\xff" * 6
LLDP_MULTICAST = bytes.fromhex("0180c200000e")
LARGE_SEND_LENGTH = 1514

IP_PROTO_ICMP = 1
IP_PROTO_TCP = 6
IP_PROTO_UDP = 17


class ProfileKind(StrEnum):
    TCP = "tcp"
    UDP = "udp"
    ARP_REQUEST = "arp_request"
    ARP_REPLY = "arp_reply"
    MIXED_APP = "mixed_app"


class MixedApp(StrEnum):
    DNS = "dns"
    WEB = "web"
    PING = "ping"
    NFS = "nfs"
    MULTICAST = "multicast"
    LARGE_SEND = "large_send"
    FTP = "ftp"
    TELNET = "telnet"


class Schedule(StrEnum):
    UNIFORM = "uniform"
    AS_FAST_AS_POSSIBLE = "as_fast_as_possible"
    SERIAL_LOCKSTEP = "serial_lockstep"
    POISSON = "poisson"


# (IP protocol, destination port) per application. Ping carries no port.
APP_PORTS: dict[MixedApp, tuple[int, int]] = {
    MixedApp.DNS: (IP_PROTO_UDP, 53),
    MixedApp.WEB: (IP_PROTO_TCP, 80),
    MixedApp.PING: (IP_PROTO_ICMP, 0),
    MixedApp.NFS: (IP_PROTO_TCP, 2049),
    MixedApp.MULTICAST: (IP_PROTO_UDP, 5000),
    MixedApp.LARGE_SEND: (IP_PROTO_TCP, 5001),
    MixedApp.FTP: (IP_PROTO_TCP, 21),
    MixedApp.TELNET: (IP_PROTO_TCP, 23),
}

_L4_HEADER_LEN = {IP_PROTO_TCP: 20, IP_PROTO_UDP: 8, IP_PROTO_ICMP: 8}

SERVER_APPS: dict[HostRole, MixedApp] = {
    HostRole.DNS_SERVER: MixedApp.DNS,
    HostRole.NFS_SERVER: MixedApp.NFS,
    HostRole.MULTICAST_SERVER: MixedApp.MULTICAST,
}


def app_servers(hosts: Iterable[HostSpec]) -> dict[MixedApp, bytes]:
    """Host serving each application, for hosts that carry a server role."""
    return {SERVER_APPS[host.role]: host.mac for host in hosts if host.role in SERVER_APPS}


def minimum_length(kind: ProfileKind) -> int:
    if kind in (ProfileKind.ARP_REQUEST, ProfileKind.ARP_REPLY):
        return ETH_HEADER_LEN + 28
    if kind is ProfileKind.UDP:
        return ETH_HEADER_LEN + IPV4_HEADER_LEN + 8
    return ETH_HEADER_LEN + IPV4_HEADER_LEN + 20


def _uniform_weights() -> dict[MixedApp, float]:
    return {app: 1 / len(MixedApp) for app in MixedApp}


class TrafficProfile(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ProfileKind = ProfileKind.TCP
    packet_length: int = Field(default=64, le=0xFFFF)
    weights: dict[MixedApp, float] = Field(default_factory=_uniform_weights)

    @model_validator(mode="after")
    def check(self) -> "TrafficProfile":
        floor = minimum_length(self.kind)
        if self.packet_length < floor:
            raise ValueError(
                f"packet_length {self.packet_length} is below the {floor}-byte "
                f"minimum for {self.kind}"
            )
        if self.kind is ProfileKind.MIXED_APP:
            if any(w < 0 for w in self.weights.values()):
                raise ValueError("mixed_app weights must be non-negative")
            if not math.isclose(sum(self.weights.values()), 1.0, abs_tol=1e-6):
                raise ValueError("mixed_app weights must sum to 1")
        return self


class ArrivalSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    rate: float = Field(default=100.0, gt=0)
    duration: float = Field(default=300.0, gt=0)
    schedule: Schedule = Schedule.UNIFORM


# Frames


def _checksum(data: bytes) -> int:
    if len(data) % 2:
        data += b"\0"
    total = sum(struct.unpack(f"!{len(data) // 2}H", data))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def ip_of(mac: bytes) -> bytes:
    """10.x.y.z derived from the low three octets of a host MAC."""
    return b"\x0a" + mac[3:6]


def _ethernet(dst: bytes, src: bytes, eth_type: int) -> bytes:
    return dst + src + struct.pack("!H", eth_type)


def _arp(src_mac: bytes, dst_mac: bytes, opcode: int, length: int) -> bytes:
    if opcode == 1:
        eth_dst, target_mac = BROADCAST_MAC, b"\0" * 6
    else:
        eth_dst, target_mac = dst_mac, dst_mac
    body = struct.pack(
        "!HHBBH6s4s6s4s",
        1,
        ETH_TYPE_IPV4,
        6,
        4,
        opcode,
        src_mac,
        ip_of(src_mac),
        target_mac,
        ip_of(dst_mac),
    )
    frame = _ethernet(eth_dst, src_mac, ETH_TYPE_ARP) + body
    return frame.ljust(length, b"\0")


def _ipv4(
    src_mac: bytes,
    dst_mac: bytes,
    proto: int,
    dst_port: int,
    seq: int,
    length: int,
    dst_ip: bytes | None = None,
) -> bytes:
    ip_total = length - ETH_HEADER_LEN
    payload_len = ip_total - IPV4_HEADER_LEN - _L4_HEADER_LEN[proto]
    src_ip = ip_of(src_mac)
    dst_ip = dst_ip or ip_of(dst_mac)
    src_port = 1024 + seq % 64511
    payload = b"\0" * payload_len

    if proto == IP_PROTO_TCP:
        header = struct.pack(
            "!HHIIBBHHH", src_port, dst_port, seq & 0xFFFFFFFF, 0, 0x50, 0x02, 0xFFFF, 0, 0
        )
    elif proto == IP_PROTO_UDP:
        header = struct.pack("!HHHH", src_port, dst_port, 8 + payload_len, 0)
    else:
        header = struct.pack("!BBHHH", 8, 0, 0, seq >> 16 & 0xFFFF, seq & 0xFFFF)

    segment = header + payload
    if proto == IP_PROTO_ICMP:
        checksum = _checksum(segment)
    else:
        pseudo = src_ip + dst_ip + struct.pack("!BBH", 0, proto, len(segment))
        checksum = _checksum(pseudo + segment)
    offset = 16 if proto == IP_PROTO_TCP else (6 if proto == IP_PROTO_UDP else 2)
    segment = segment[:offset] + struct.pack("!H", checksum) + segment[offset + 2 :]

    ip_header = struct.pack(
        "!BBHHHBBH4s4s", 0x45, 0, ip_total, seq & 0xFFFF, 0x4000, 64, proto, 0, src_ip, dst_ip
    )
    ip_header = ip_header[:10] + struct.pack("!H", _checksum(ip_header)) + ip_header[12:]
    return _ethernet(dst_mac, src_mac, ETH_TYPE_IPV4) + ip_header + segment


def pick_app(weights: dict[MixedApp, float], flow_seq: int) -> MixedApp:
    """Deterministic weighted choice spread over consecutive sequence numbers."""
    position = (flow_seq * 0x9E3779B97F4A7C15 & 0xFFFFFFFFFFFFFFFF) / 2**64
    cumulative = 0.0
    chosen = MixedApp.DNS
    for app in MixedApp:
        weight = weights.get(app, 0.0)
        if weight <= 0:
            continue
        chosen = app
        cumulative += weight
        if position < cumulative:
            return app
    return chosen


def next_frame(
    profile: TrafficProfile, src_mac: bytes, dst_mac: bytes, flow_seq: int
) -> bytes:
    """Build the frame for flow ``flow_seq`` of ``profile``."""
    length = profile.packet_length
    floor = minimum_length(profile.kind)
    if length < floor:
        raise LengthTooSmall(f"{profile.kind} frames need {floor} bytes, asked for {length}")

    match profile.kind:
        case ProfileKind.ARP_REQUEST:
            return _arp(src_mac, dst_mac, 1, length)
        case ProfileKind.ARP_REPLY:
            return _arp(src_mac, dst_mac, 2, length)
        case ProfileKind.TCP:
            return _ipv4(src_mac, dst_mac, IP_PROTO_TCP, 80, flow_seq, length)
        case ProfileKind.UDP:
            return _ipv4(src_mac, dst_mac, IP_PROTO_UDP, 53, flow_seq, length)

    app = pick_app(profile.weights, flow_seq)
    proto, port = APP_PORTS[app]
    if app is MixedApp.LARGE_SEND:
        length = max(length, LARGE_SEND_LENGTH)
    dst_ip = None
    if app is MixedApp.MULTICAST:
        dst_ip = bytes([239, 1]) + dst_mac[4:6]
    return _ipv4(src_mac, dst_mac, proto, port, flow_seq, length, dst_ip)


def eth_type_of(frame: bytes) -> int | None:
    if len(frame) < ETH_HEADER_LEN:
        return None
    return int.from_bytes(frame[12:14], "big")


def eth_addresses(frame: bytes) -> tuple[bytes, bytes]:
    """(source, destination) MACs of an Ethernet frame."""
    return frame[6:12], frame[0:6]


# Discovery probes

_LLDP_CHASSIS = 1
_LLDP_PORT = 2
_LLDP_TTL = 3


def _tlv(tlv_type: int, value: bytes) -> bytes:
    return struct.pack("!H", tlv_type << 9 | len(value)) + value


def lldp_frame(dpid: int, port_no: int, eth_type: int = ETH_TYPE_LLDP) -> bytes:
    """LLDP (or BDDP) probe naming the sending switch port."""
    src = host_mac(dpid, 0xFF00 | (port_no & 0xFF))
    body = (
        _tlv(_LLDP_CHASSIS, b"\x07" + f"dpid:{dpid:016x}".encode())
        + _tlv(_LLDP_PORT, b"\x02" + port_no.to_bytes(4, "big"))
        + _tlv(_LLDP_TTL, (120).to_bytes(2, "big"))
        + _tlv(0, b"")
    )
    return _ethernet(LLDP_MULTICAST, src, eth_type) + body


def is_discovery_frame(frame: bytes) -> bool:
    return eth_type_of(frame) in DISCOVERY_ETH_TYPES


def parse_lldp(frame: bytes) -> PortRef | None:
    """Return the (dpid, port) a probe was sent from, or None if it is not ours."""
    if not is_discovery_frame(frame):
        return None
    dpid = port = None
    offset = ETH_HEADER_LEN
    while offset + 2 <= len(frame):
        (header,) = struct.unpack_from("!H", frame, offset)
        tlv_type, length = header >> 9, header & 0x1FF
        value = frame[offset + 2 : offset + 2 + length]
        if tlv_type == 0 or len(value) < length:
            break
        if tlv_type == _LLDP_CHASSIS and value[:1] == b"\x07":
            text = value[1:].decode("ascii", errors="replace")
            if text.startswith("dpid:"):
                try:
                    dpid = int(text[5:], 16)
                except ValueError:
                    return None
        elif tlv_type == _LLDP_PORT and value[:1] == b"\x02" and length == 5:
            port = int.from_bytes(value[1:5], "big")
        offset += 2 + length
    if dpid is None or port is None:
        return None
    return dpid, port


# Arrivals


def arrival_stream(spec: ArrivalSpec, seed: int = 0) -> Iterator[tuple[float, int]]:
    """Yield (emit offset in seconds, flow sequence) pairs.

    Uniform and poisson streams end at ``spec.duration``. The other two
    schedules are unbounded with zero offsets; the engine bounds them by time
    and paces them by backpressure or by responses.
    """
    match spec.schedule:
        case Schedule.UNIFORM:
            count = math.ceil(spec.rate * spec.duration - 1e-9)
            for seq in range(count):
                yield seq / spec.rate, seq
        case Schedule.POISSON:
            rng = random.Random(seed)
            offset = 0.0
            seq = 0
            while offset < spec.duration:
                yield offset, seq
                seq += 1
                offset += rng.expovariate(spec.rate)
        case _:
            seq = 0
            while True:
                yield 0.0, seq
                seq += 1


class FlowSource:
    """Assigns (src, dst, frame) to flow sequence numbers for one switch.

    Sources walk the switch's MAC pool in order, so every pool address is used
    before any repeats. Destinations rotate through ``destinations``, except
    that mixed-application flows of a served application go to its server.
    """

    def __init__(
        self,
        profile: TrafficProfile,
        mac_pool: Sequence[bytes],
        destinations: Sequence[bytes] = (),
        servers: Mapping[MixedApp, bytes] | None = None,
    ):
        if not mac_pool:
            raise ValueError("mac_pool must hold at least one address")
        self.profile = profile
        self.mac_pool = list(mac_pool)
        self.destinations = list(destinations) or self.mac_pool
        self.servers = dict(servers or {}) if profile.kind is ProfileKind.MIXED_APP else {}

    def pair(self, flow_seq: int) -> tuple[bytes, bytes]:
        pool = len(self.mac_pool)
        src = self.mac_pool[flow_seq % pool]
        if self.servers:
            server = self.servers.get(pick_app(self.profile.weights, flow_seq))
            if server is not None and server != src:
                return src, server
        candidates = self.destinations
        start = (flow_seq // pool + flow_seq) % len(candidates)
        for step in range(len(candidates)):
            dst = candidates[(start + step) % len(candidates)]
            if dst != src:
                return src, dst
        # Only one address exists; send to a peer that is never a host.
        return src, host_mac(0xFFFF, flow_seq & 0xFFFF)

    def frame(self, flow_seq: int) -> tuple[bytes, bytes, bytes]:
        src, dst = self.pair(flow_seq)
        return src, dst, next_frame(self.profile, src, dst, flow_seq)
