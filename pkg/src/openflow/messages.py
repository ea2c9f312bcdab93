"""Structured OpenFlow message bodies.

Bodies are frozen dataclasses so decoded messages compare by value and can be
used as dict keys (flow table entries key on the match). Fields the harness
does not interpret are kept as raw bytes so that re-encoding is bit-exact.
"""

import struct
from dataclasses import dataclass
from typing import Union

from openflow.constants import (
    OFP_NO_BUFFER,
    OFPAT_OUTPUT,
    OFPFW_ALL,
    OFPFW_DL_DST,
    OFPFW_DL_SRC,
    OFPFW_DL_TYPE,
    OFPFW_IN_PORT,
    OFPIT_APPLY_ACTIONS,
    OFPXMC_OPENFLOW_BASIC,
    OXM_ETH_DST,
    OXM_ETH_SRC,
    OXM_ETH_TYPE,
    OXM_IN_PORT,
    MessageKind,
    ProtocolVersion,
)

ZERO_MAC = b"\x00" * 6


# Matches


@dataclass(frozen=True, slots=True)
class StandardMatch:
    """OpenFlow 1.0 fixed-layout match (40 bytes on the wire).

    ``remainder`` holds the VLAN word followed by the 16 bytes of L3/L4
    fields, which the harness never interprets.
    """

    wildcards: int = OFPFW_ALL
    in_port: int = 0
    eth_src: bytes = ZERO_MAC
    eth_dst: bytes = ZERO_MAC
    eth_type: int = 0
    remainder: bytes = b"\x00" * 20

    def covers(self, eth_src: bytes, eth_dst: bytes) -> bool:
        src_ok = bool(self.wildcards & OFPFW_DL_SRC) or self.eth_src == eth_src
        dst_ok = bool(self.wildcards & OFPFW_DL_DST) or self.eth_dst == eth_dst
        return src_ok and dst_ok


@dataclass(frozen=True, slots=True)
class OxmField:
    oxm_class: int
    field: int
    has_mask: bool
    value: bytes


@dataclass(frozen=True, slots=True)
class OxmMatch:
    """OpenFlow 1.3 OXM match: an ordered list of TLVs."""

    fields: tuple[OxmField, ...] = ()

    def _basic(self, oxm_field: int) -> bytes | None:
        for tlv in self.fields:
            if tlv.oxm_class == OFPXMC_OPENFLOW_BASIC and tlv.field == oxm_field:
                return tlv.value
        return None

    @property
    def in_port(self) -> int | None:
        value = self._basic(OXM_IN_PORT)
        return int.from_bytes(value[:4], "big") if value else None

    @property
    def eth_src(self) -> bytes | None:
        value = self._basic(OXM_ETH_SRC)
        return value[:6] if value else None

    @property
    def eth_dst(self) -> bytes | None:
        value = self._basic(OXM_ETH_DST)
        return value[:6] if value else None

    @property
    def eth_type(self) -> int | None:
        value = self._basic(OXM_ETH_TYPE)
        return int.from_bytes(value[:2], "big") if value else None

    def covers(self, eth_src: bytes, eth_dst: bytes) -> bool:
        src, dst = self.eth_src, self.eth_dst
        return (src is None or src == eth_src) and (dst is None or dst == eth_dst)


Match = Union[StandardMatch, OxmMatch]


def build_match(
    version: ProtocolVersion,
    in_port: int | None = None,
    eth_src: bytes | None = None,
    eth_dst: bytes | None = None,
    eth_type: int | None = None,
) -> Match:
    """Build a version-appropriate match on the four fields the harness uses."""
    if version is ProtocolVersion.V1_0:
        wildcards = OFPFW_ALL
        if in_port is not None:
            wildcards &= ~OFPFW_IN_PORT
        if eth_src is not None:
            wildcards &= ~OFPFW_DL_SRC
        if eth_dst is not None:
            wildcards &= ~OFPFW_DL_DST
        if eth_type is not None:
            wildcards &= ~OFPFW_DL_TYPE
        return StandardMatch(
            wildcards=wildcards,
            in_port=in_port or 0,
            eth_src=eth_src or ZERO_MAC,
            eth_dst=eth_dst or ZERO_MAC,
            eth_type=eth_type or 0,
        )

    fields: list[OxmField] = []
    if in_port is not None:
        fields.append(_basic_tlv(OXM_IN_PORT, in_port.to_bytes(4, "big")))
    if eth_dst is not None:
        fields.append(_basic_tlv(OXM_ETH_DST, eth_dst))
    if eth_src is not None:
        fields.append(_basic_tlv(OXM_ETH_SRC, eth_src))
    if eth_type is not None:
        fields.append(_basic_tlv(OXM_ETH_TYPE, eth_type.to_bytes(2, "big")))
    return OxmMatch(tuple(fields))


def _basic_tlv(oxm_field: int, value: bytes) -> OxmField:
    return OxmField(OFPXMC_OPENFLOW_BASIC, oxm_field, False, value)


# Ports


@dataclass(frozen=True, slots=True)
class Port:
    """Physical port description (ofp_phy_port in 1.0, ofp_port in 1.3)."""

    port_no: int
    hw_addr: bytes = ZERO_MAC
    name: str = ""
    config: int = 0
    state: int = 0
    curr: int = 0
    advertised: int = 0
    supported: int = 0
    peer: int = 0
    curr_speed: int = 0
    max_speed: int = 0


# Bodies


@dataclass(frozen=True, slots=True)
class Hello:
    """Hello. ``wire_version`` keeps the header version of a peer newer than ours."""

    elements: bytes = b""
    wire_version: int | None = None


@dataclass(frozen=True, slots=True)
class ErrorMsg:
    err_type: int
    code: int
    data: bytes = b""


@dataclass(frozen=True, slots=True)
class EchoRequest:
    payload: bytes = b""


@dataclass(frozen=True, slots=True)
class EchoReply:
    payload: bytes = b""


@dataclass(frozen=True, slots=True)
class FeaturesRequest:
    pass


@dataclass(frozen=True, slots=True)
class FeaturesReply:
    """Switch features. ``reserved`` is the actions bitmap in 1.0.

    Ports are only carried in 1.0; 1.3 switches report them via PORT_DESC.
    """

    datapath_id: int
    n_buffers: int = 256
    n_tables: int = 1
    capabilities: int = 0
    reserved: int = 0
    auxiliary_id: int = 0
    ports: tuple[Port, ...] = ()


@dataclass(frozen=True, slots=True)
class GetConfigRequest:
    pass


@dataclass(frozen=True, slots=True)
class GetConfigReply:
    flags: int = 0
    miss_send_len: int = 128


@dataclass(frozen=True, slots=True)
class SetConfig:
    flags: int = 0
    miss_send_len: int = 128


@dataclass(frozen=True, slots=True)
class PacketIn:
    """PacketIn. In 1.3 ``in_port`` travels inside the OXM match.

    ``match`` is only set for 1.3 messages whose match is something other than
    the single IN_PORT field; leave it ``None`` otherwise.
    """

    buffer_id: int
    total_len: int
    in_port: int
    reason: int
    data: bytes = b""
    table_id: int = 0
    cookie: int = 0
    match: OxmMatch | None = None


@dataclass(frozen=True, slots=True)
class PacketOut:
    buffer_id: int
    in_port: int
    actions: bytes = b""
    data: bytes = b""


@dataclass(frozen=True, slots=True)
class FlowMod:
    """FlowMod. ``out_port=None`` encodes OFPP_NONE (1.0) / OFPP_ANY (1.3).

    ``instructions`` carries the raw action list in 1.0 and the raw
    instruction list in 1.3.
    """

    match: Match
    command: int = 0
    priority: int = 0x8000
    cookie: int = 0
    idle_timeout: int = 0
    hard_timeout: int = 0
    buffer_id: int = OFP_NO_BUFFER
    out_port: int | None = None
    flags: int = 0
    table_id: int = 0
    cookie_mask: int = 0
    out_group: int = 0xFFFFFFFF
    instructions: bytes = b""


@dataclass(frozen=True, slots=True)
class PortStatus:
    reason: int
    port: Port


@dataclass(frozen=True, slots=True)
class MultipartRequest:
    mp_type: int
    flags: int = 0
    body: bytes = b""


@dataclass(frozen=True, slots=True)
class MultipartReply:
    mp_type: int
    flags: int = 0
    body: bytes = b""


@dataclass(frozen=True, slots=True)
class BarrierRequest:
    pass


@dataclass(frozen=True, slots=True)
class BarrierReply:
    pass


@dataclass(frozen=True, slots=True)
class RoleRequest:
    role: int
    generation_id: int = 0


@dataclass(frozen=True, slots=True)
class RoleReply:
    role: int
    generation_id: int = 0


@dataclass(frozen=True, slots=True)
class Unknown:
    """Any message type the harness does not model, kept verbatim."""

    msg_type: int
    data: bytes = b""


Body = Union[
    Hello,
    ErrorMsg,
    EchoRequest,
    EchoReply,
    FeaturesRequest,
    FeaturesReply,
    GetConfigRequest,
    GetConfigReply,
    SetConfig,
    PacketIn,
    PacketOut,
    FlowMod,
    PortStatus,
    MultipartRequest,
    MultipartReply,
    BarrierRequest,
    BarrierReply,
    RoleRequest,
    RoleReply,
    Unknown,
]

BODY_KINDS: dict[type, MessageKind] = {
    Hello: MessageKind.HELLO,
    ErrorMsg: MessageKind.ERROR,
    EchoRequest: MessageKind.ECHO_REQUEST,
    EchoReply: MessageKind.ECHO_REPLY,
    FeaturesRequest: MessageKind.FEATURES_REQUEST,
    FeaturesReply: MessageKind.FEATURES_REPLY,
    GetConfigRequest: MessageKind.GET_CONFIG_REQUEST,
    GetConfigReply: MessageKind.GET_CONFIG_REPLY,
    SetConfig: MessageKind.SET_CONFIG,
    PacketIn: MessageKind.PACKET_IN,
    PacketOut: MessageKind.PACKET_OUT,
    FlowMod: MessageKind.FLOW_MOD,
    PortStatus: MessageKind.PORT_STATUS,
    MultipartRequest: MessageKind.MULTIPART_REQUEST,
    MultipartReply: MessageKind.MULTIPART_REPLY,
    BarrierRequest: MessageKind.BARRIER_REQUEST,
    BarrierReply: MessageKind.BARRIER_REPLY,
    RoleRequest: MessageKind.ROLE_REQUEST,
    RoleReply: MessageKind.ROLE_REPLY,
    Unknown: MessageKind.UNKNOWN,
}


# Actions and instructions (kept as raw bytes on the messages)


def output_action(version: ProtocolVersion, port: int, max_len: int = 0xFFFF) -> bytes:
    if version is ProtocolVersion.V1_0:
        return struct.pack("!HHHH", OFPAT_OUTPUT, 8, port, max_len)
    return struct.pack("!HHIH6x", OFPAT_OUTPUT, 16, port, max_len)


def apply_actions(actions: bytes) -> bytes:
    """Wrap an action list in an APPLY_ACTIONS instruction (1.3)."""
    return struct.pack("!HH4x", OFPIT_APPLY_ACTIONS, 8 + len(actions)) + actions


def output_ports(version: ProtocolVersion, actions: bytes) -> list[int]:
    """Return the ports of all OUTPUT actions in a raw action list."""
    ports: list[int] = []
    offset = 0
    while offset + 4 <= len(actions):
        action_type, length = struct.unpack_from("!HH", actions, offset)
        if length < 4 or offset + length > len(actions):
            break
        if action_type == OFPAT_OUTPUT:
            if version is ProtocolVersion.V1_0 and length >= 8:
                ports.append(struct.unpack_from("!H", actions, offset + 4)[0])
            elif version is ProtocolVersion.V1_3 and length >= 16:
                ports.append(struct.unpack_from("!I", actions, offset + 4)[0])
        offset += length
    return ports


def hello_bitmap_element(versions: list[ProtocolVersion]) -> bytes:
    bitmap = 0
    for version in versions:
        bitmap |= 1 << int(version)
    return struct.pack("!HHI", 1, 8, bitmap)


def hello_versions(version: ProtocolVersion | int, elements: bytes) -> set[int]:
    """Versions advertised by a Hello: its bitmap if present, else its header."""
    offset = 0
    while offset + 4 <= len(elements):
        element_type, length = struct.unpack_from("!HH", elements, offset)
        if length < 4:
            break
        if element_type == 1 and length >= 8:
            bitmap = struct.unpack_from("!I", elements, offset + 4)[0]
            return {bit for bit in range(32) if bitmap & (1 << bit)}
        offset += (length + 7) // 8 * 8
    return {int(version)}
