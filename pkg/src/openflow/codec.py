"""Bit-exact OpenFlow 1.0 / 1.3 encoder, decoder and stream framer.

All functions are pure and stateless apart from ``MessageFramer``, which owns
one session's receive buffer. Integers are big-endian throughout.
"""

import struct
from collections.abc import Callable
from dataclasses import dataclass, field

from errors import (
    BodyTooLarge,
    MalformedHeader,
    MalformedMessage,
    UnsupportedVersion,
    VersionMismatch,
)
from openflow.constants import (
    OFP_HEADER_LEN,
    OFP_MAX_LENGTH,
    OFPMT_OXM,
    MessageKind,
    Port10,
    Port13,
    ProtocolVersion,
    kind_of,
    type_code,
)
from openflow.messages import (
    BODY_KINDS,
    BarrierReply,
    BarrierRequest,
    Body,
    EchoReply,
    EchoRequest,
    ErrorMsg,
    FeaturesReply,
    FeaturesRequest,
    FlowMod,
    GetConfigReply,
    GetConfigRequest,
    Hello,
    Match,
    MultipartReply,
    MultipartRequest,
    OxmField,
    OxmMatch,
    PacketIn,
    PacketOut,
    Port,
    PortStatus,
    RoleReply,
    RoleRequest,
    SetConfig,
    StandardMatch,
    Unknown,
    build_match,
    hello_versions,
)

HEADER = struct.Struct("!BBHI")
SUPPORTED_WIRE_VERSIONS = frozenset(int(v) for v in ProtocolVersion)
# Hello has type 0 in every OpenFlow version.
OFPT_HELLO = 0


def _hello_version(wire_version: int) -> ProtocolVersion:
    """Highest version we speak that a Hello of ``wire_version`` still covers."""
    covered = [v for v in ProtocolVersion if v <= wire_version]
    if not covered:
        raise UnsupportedVersion(wire_version)
    return max(covered)


_PORT_10 = struct.Struct("!H6s16sIIIIII")  # 48 bytes
_PORT_13 = struct.Struct("!I4x6s2x16sIIIIIIII")  # 64 bytes
_FEATURES_10 = struct.Struct("!QIB3xII")
_FEATURES_13 = struct.Struct("!QIBB2xII")
_SWITCH_CONFIG = struct.Struct("!HH")
_ERROR = struct.Struct("!HH")
_PACKET_IN_10 = struct.Struct("!IHHBx")
_PACKET_IN_13 = struct.Struct("!IHBBQ")
_PACKET_OUT_10 = struct.Struct("!IHH")
_PACKET_OUT_13 = struct.Struct("!IIH6x")
_MATCH_10 = struct.Struct("!IH6s6s4sH16s")
_FLOW_MOD_10 = struct.Struct("!QHHHHIHH")
_FLOW_MOD_13 = struct.Struct("!QQBBHHHIIIH2x")
_PORT_STATUS = struct.Struct("!B7x")
_MULTIPART = struct.Struct("!HH4x")
_ROLE = struct.Struct("!I4xQ")

_OUT_PORT_NONE = {ProtocolVersion.V1_0: int(Port10.NONE), ProtocolVersion.V1_3: int(Port13.ANY)}


@dataclass(frozen=True, slots=True)
class OfHeader:
    version: ProtocolVersion
    msg_type: int
    length: int
    xid: int

    @property
    def kind(self) -> MessageKind:
        return kind_of(self.version, self.msg_type)


@dataclass(frozen=True, slots=True)
class OfMessage:
    """A decoded OpenFlow message.

    The header is derived rather than stored: ``msg_type`` follows from the
    body and version, ``length`` from the encoded size.
    """

    version: ProtocolVersion
    xid: int
    body: Body = field(default_factory=Hello)

    def __post_init__(self) -> None:
        if not 0 <= self.xid <= 0xFFFFFFFF:
            raise ValueError(f"xid {self.xid} does not fit in 32 bits")
        body = self.body
        if isinstance(body, FlowMod) and body.out_port == _OUT_PORT_NONE[self.version]:
            raise ValueError("FlowMod out_port is the wildcard port; leave it None")
        if isinstance(body, FeaturesReply) and body.ports and self.version != ProtocolVersion.V1_0:
            raise ValueError("only OpenFlow 1.0 FeaturesReply carries ports")
        if isinstance(body, Hello) and body.wire_version is not None:
            wire = body.wire_version
            if wire in SUPPORTED_WIRE_VERSIONS or _hello_version(wire) != self.version:
                raise ValueError(f"Hello wire version {wire} does not fit OpenFlow {self.version}")

    @property
    def kind(self) -> MessageKind:
        return BODY_KINDS[type(self.body)]

    @property
    def msg_type(self) -> int:
        if isinstance(self.body, Unknown):
            return self.body.msg_type
        return type_code(self.version, self.kind)

    @property
    def header(self) -> OfHeader:
        return OfHeader(self.version, self.msg_type, len(encode(self)), self.xid)


# Ports


def _decode_port(version: ProtocolVersion, data: bytes, offset: int) -> Port:
    if version is ProtocolVersion.V1_0:
        (port_no, hw_addr, name, config, state, curr, adv, supp, peer) = (
            _PORT_10.unpack_from(data, offset)
        )
        speeds = (0, 0)
    else:
        (port_no, hw_addr, name, config, state, curr, adv, supp, peer, *speeds) = (
            _PORT_13.unpack_from(data, offset)
        )
    return Port(
        port_no=port_no,
        hw_addr=hw_addr,
        name=name.partition(b"\0")[0].decode("utf-8", errors="replace"),
        config=config,
        state=state,
        curr=curr,
        advertised=adv,
        supported=supp,
        peer=peer,
        curr_speed=speeds[0],
        max_speed=speeds[1],
    )


def _encode_port(version: ProtocolVersion, port: Port) -> bytes:
    name = port.name.encode("utf-8")[:16]
    common = (port.config, port.state, port.curr, port.advertised, port.supported, port.peer)
    if version is ProtocolVersion.V1_0:
        return _PORT_10.pack(port.port_no, port.hw_addr, name, *common)
    return _PORT_13.pack(
        port.port_no, port.hw_addr, name, *common, port.curr_speed, port.max_speed
    )


def port_size(version: ProtocolVersion) -> int:
    return _PORT_10.size if version is ProtocolVersion.V1_0 else _PORT_13.size


def encode_port_desc(ports: list[Port] | tuple[Port, ...]) -> bytes:
    """Body of a 1.3 PORT_DESC multipart reply."""
    return b"".join(_encode_port(ProtocolVersion.V1_3, port) for port in ports)


def decode_port_desc(body: bytes) -> list[Port]:
    size = _PORT_13.size
    return [
        _decode_port(ProtocolVersion.V1_3, body, offset)
        for offset in range(0, len(body) - size + 1, size)
    ]


# Matches


def _align8(length: int) -> int:
    return (length + 7) // 8 * 8


def _encode_oxm(match: OxmMatch) -> bytes:
    tlvs = b"".join(
        struct.pack(
            "!HBB", tlv.oxm_class, (tlv.field << 1) | int(tlv.has_mask), len(tlv.value)
        )
        + tlv.value
        for tlv in match.fields
    )
    length = 4 + len(tlvs)
    return struct.pack("!HH", OFPMT_OXM, length) + tlvs + b"\0" * (_align8(length) - length)


def _decode_oxm(data: bytes, offset: int) -> tuple[OxmMatch, int]:
    """Decode an ofp_match at ``offset``; returns the match and padded size."""
    if offset + 4 > len(data):
        raise MalformedMessage("match header truncated")
    match_type, length = struct.unpack_from("!HH", data, offset)
    if match_type != OFPMT_OXM or length < 4:
        raise MalformedMessage(f"unsupported match type {match_type} (length {length})")
    padded = _align8(length)
    if offset + padded > len(data):
        raise MalformedMessage("match body truncated")
    fields: list[OxmField] = []
    cursor = offset + 4
    end = offset + length
    while cursor < end:
        if cursor + 4 > end:
            raise MalformedMessage("OXM TLV header truncated")
        oxm_class, field_and_mask, tlv_len = struct.unpack_from("!HBB", data, cursor)
        cursor += 4
        if cursor + tlv_len > end:
            raise MalformedMessage("OXM TLV value truncated")
        fields.append(
            OxmField(
                oxm_class=oxm_class,
                field=field_and_mask >> 1,
                has_mask=bool(field_and_mask & 1),
                value=bytes(data[cursor : cursor + tlv_len]),
            )
        )
        cursor += tlv_len
    return OxmMatch(tuple(fields)), padded


def _encode_standard_match(match: StandardMatch) -> bytes:
    remainder = match.remainder.ljust(20, b"\0")[:20]
    return _MATCH_10.pack(
        match.wildcards,
        match.in_port,
        match.eth_src,
        match.eth_dst,
        remainder[:4],
        match.eth_type,
        remainder[4:],
    )


def _decode_standard_match(data: bytes, offset: int) -> StandardMatch:
    wildcards, in_port, eth_src, eth_dst, vlan, eth_type, rest = _MATCH_10.unpack_from(
        data, offset
    )
    return StandardMatch(wildcards, in_port, eth_src, eth_dst, eth_type, vlan + rest)


def _encode_match(version: ProtocolVersion, match: Match) -> bytes:
    if version is ProtocolVersion.V1_0:
        if not isinstance(match, StandardMatch):
            raise ValueError("OpenFlow 1.0 messages need a StandardMatch")
        return _encode_standard_match(match)
    if not isinstance(match, OxmMatch):
        raise ValueError("OpenFlow 1.3 messages need an OxmMatch")
    return _encode_oxm(match)


# Body codecs. Each decoder receives the body (header stripped).

_BodyDecoder = Callable[[ProtocolVersion, bytes], Body]
_BodyEncoder = Callable[[ProtocolVersion, Body], bytes]


def _need(body: bytes, size: int, what: str) -> None:
    if len(body) < size:
        raise MalformedMessage(f"{what} body needs {size} bytes, got {len(body)}")


def _exact(body: bytes, size: int, what: str) -> None:
    if len(body) != size:
        raise MalformedMessage(f"{what} body must be {size} bytes, got {len(body)}")


def _dec_features_reply(version: ProtocolVersion, body: bytes) -> Body:
    if version is ProtocolVersion.V1_0:
        _need(body, _FEATURES_10.size, "features_reply")
        dpid, n_buffers, n_tables, capabilities, actions = _FEATURES_10.unpack_from(body)
        size = _PORT_10.size
        tail = len(body) - _FEATURES_10.size
        if tail % size:
            raise MalformedMessage("features_reply port list is not a multiple of 48")
        ports = tuple(
            _decode_port(version, body, offset)
            for offset in range(_FEATURES_10.size, len(body), size)
        )
        return FeaturesReply(dpid, n_buffers, n_tables, capabilities, actions, 0, ports)
    _exact(body, _FEATURES_13.size, "features_reply")
    dpid, n_buffers, n_tables, aux_id, capabilities, reserved = _FEATURES_13.unpack(body)
    return FeaturesReply(dpid, n_buffers, n_tables, capabilities, reserved, aux_id)


def _enc_features_reply(version: ProtocolVersion, body: Body) -> bytes:
    assert isinstance(body, FeaturesReply)
    if version is ProtocolVersion.V1_0:
        head = _FEATURES_10.pack(
            body.datapath_id, body.n_buffers, body.n_tables, body.capabilities, body.reserved
        )
        return head + b"".join(_encode_port(version, port) for port in body.ports)
    return _FEATURES_13.pack(
        body.datapath_id,
        body.n_buffers,
        body.n_tables,
        body.auxiliary_id,
        body.capabilities,
        body.reserved,
    )


def _dec_packet_in(version: ProtocolVersion, body: bytes) -> Body:
    if version is ProtocolVersion.V1_0:
        _need(body, _PACKET_IN_10.size, "packet_in")
        buffer_id, total_len, in_port, reason = _PACKET_IN_10.unpack_from(body)
        return PacketIn(buffer_id, total_len, in_port, reason, bytes(body[_PACKET_IN_10.size :]))
    _need(body, _PACKET_IN_13.size, "packet_in")
    buffer_id, total_len, reason, table_id, cookie = _PACKET_IN_13.unpack_from(body)
    match, match_size = _decode_oxm(body, _PACKET_IN_13.size)
    data_offset = _PACKET_IN_13.size + match_size + 2
    _need(body, data_offset, "packet_in")
    in_port = match.in_port or 0
    canonical = build_match(version, in_port=in_port)
    return PacketIn(
        buffer_id,
        total_len,
        in_port,
        reason,
        bytes(body[data_offset:]),
        table_id,
        cookie,
        None if match == canonical else match,
    )


def _enc_packet_in(version: ProtocolVersion, body: Body) -> bytes:
    assert isinstance(body, PacketIn)
    if version is ProtocolVersion.V1_0:
        return (
            _PACKET_IN_10.pack(body.buffer_id, body.total_len, body.in_port, body.reason)
            + body.data
        )
    match = body.match if body.match is not None else build_match(version, in_port=body.in_port)
    assert isinstance(match, OxmMatch)
    return (
        _PACKET_IN_13.pack(
            body.buffer_id, body.total_len, body.reason, body.table_id, body.cookie
        )
        + _encode_oxm(match)
        + b"\0\0"
        + body.data
    )


def _dec_packet_out(version: ProtocolVersion, body: bytes) -> Body:
    if version is ProtocolVersion.V1_0:
        fixed = _PACKET_OUT_10
        _need(body, fixed.size, "packet_out")
        buffer_id, in_port, actions_len = fixed.unpack_from(body)
    else:
        fixed = _PACKET_OUT_13
        _need(body, fixed.size, "packet_out")
        buffer_id, in_port, actions_len = fixed.unpack_from(body)
    end = fixed.size + actions_len
    _need(body, end, "packet_out")
    return PacketOut(buffer_id, in_port, bytes(body[fixed.size : end]), bytes(body[end:]))


def _enc_packet_out(version: ProtocolVersion, body: Body) -> bytes:
    assert isinstance(body, PacketOut)
    fixed = _PACKET_OUT_10 if version is ProtocolVersion.V1_0 else _PACKET_OUT_13
    return fixed.pack(body.buffer_id, body.in_port, len(body.actions)) + body.actions + body.data


def _dec_flow_mod(version: ProtocolVersion, body: bytes) -> Body:
    none_port = _OUT_PORT_NONE[version]
    if version is ProtocolVersion.V1_0:
        _need(body, _MATCH_10.size + _FLOW_MOD_10.size, "flow_mod")
        match = _decode_standard_match(body, 0)
        (cookie, command, idle, hard, priority, buffer_id, out_port, flags) = (
            _FLOW_MOD_10.unpack_from(body, _MATCH_10.size)
        )
        return FlowMod(
            match=match,
            command=command,
            priority=priority,
            cookie=cookie,
            idle_timeout=idle,
            hard_timeout=hard,
            buffer_id=buffer_id,
            out_port=None if out_port == none_port else out_port,
            flags=flags,
            instructions=bytes(body[_MATCH_10.size + _FLOW_MOD_10.size :]),
        )
    _need(body, _FLOW_MOD_13.size, "flow_mod")
    (
        cookie,
        cookie_mask,
        table_id,
        command,
        idle,
        hard,
        priority,
        buffer_id,
        out_port,
        out_group,
        flags,
    ) = _FLOW_MOD_13.unpack_from(body)
    oxm, match_size = _decode_oxm(body, _FLOW_MOD_13.size)
    return FlowMod(
        match=oxm,
        command=command,
        priority=priority,
        cookie=cookie,
        idle_timeout=idle,
        hard_timeout=hard,
        buffer_id=buffer_id,
        out_port=None if out_port == none_port else out_port,
        flags=flags,
        table_id=table_id,
        cookie_mask=cookie_mask,
        out_group=out_group,
        instructions=bytes(body[_FLOW_MOD_13.size + match_size :]),
    )


def _enc_flow_mod(version: ProtocolVersion, body: Body) -> bytes:
    assert isinstance(body, FlowMod)
    out_port = _OUT_PORT_NONE[version] if body.out_port is None else body.out_port
    match = _encode_match(version, body.match)
    if version is ProtocolVersion.V1_0:
        return (
            match
            + _FLOW_MOD_10.pack(
                body.cookie,
                body.command,
                body.idle_timeout,
                body.hard_timeout,
                body.priority,
                body.buffer_id,
                out_port,
                body.flags,
            )
            + body.instructions
        )
    return (
        _FLOW_MOD_13.pack(
            body.cookie,
            body.cookie_mask,
            body.table_id,
            body.command,
            body.idle_timeout,
            body.hard_timeout,
            body.priority,
            body.buffer_id,
            out_port,
            body.out_group,
            body.flags,
        )
        + match
        + body.instructions
    )


def _dec_port_status(version: ProtocolVersion, body: bytes) -> Body:
    _exact(body, _PORT_STATUS.size + port_size(version), "port_status")
    (reason,) = _PORT_STATUS.unpack_from(body)
    return PortStatus(reason, _decode_port(version, body, _PORT_STATUS.size))


def _enc_port_status(version: ProtocolVersion, body: Body) -> bytes:
    assert isinstance(body, PortStatus)
    return _PORT_STATUS.pack(body.reason) + _encode_port(version, body.port)


def _dec_error(version: ProtocolVersion, body: bytes) -> Body:
    _need(body, _ERROR.size, "error")
    err_type, code = _ERROR.unpack_from(body)
    return ErrorMsg(err_type, code, bytes(body[_ERROR.size :]))


def _enc_error(version: ProtocolVersion, body: Body) -> bytes:
    assert isinstance(body, ErrorMsg)
    return _ERROR.pack(body.err_type, body.code) + body.data


def _dec_switch_config(cls: type[GetConfigReply] | type[SetConfig]) -> _BodyDecoder:
    def decode_config(version: ProtocolVersion, body: bytes) -> Body:
        _exact(body, _SWITCH_CONFIG.size, cls.__name__)
        return cls(*_SWITCH_CONFIG.unpack(body))

    return decode_config


def _enc_switch_config(version: ProtocolVersion, body: Body) -> bytes:
    assert isinstance(body, (GetConfigReply, SetConfig))
    return _SWITCH_CONFIG.pack(body.flags, body.miss_send_len)


def _dec_multipart(cls: type[MultipartRequest] | type[MultipartReply]) -> _BodyDecoder:
    def decode_multipart(version: ProtocolVersion, body: bytes) -> Body:
        _need(body, _MULTIPART.size, "multipart")
        mp_type, flags = _MULTIPART.unpack_from(body)
        return cls(mp_type, flags, bytes(body[_MULTIPART.size :]))

    return decode_multipart


def _enc_multipart(version: ProtocolVersion, body: Body) -> bytes:
    assert isinstance(body, (MultipartRequest, MultipartReply))
    return _MULTIPART.pack(body.mp_type, body.flags) + body.body


def _dec_role(cls: type[RoleRequest] | type[RoleReply]) -> _BodyDecoder:
    def decode_role(version: ProtocolVersion, body: bytes) -> Body:
        _exact(body, _ROLE.size, "role")
        return cls(*_ROLE.unpack(body))

    return decode_role


def _enc_role(version: ProtocolVersion, body: Body) -> bytes:
    assert isinstance(body, (RoleRequest, RoleReply))
    return _ROLE.pack(body.role, body.generation_id)


def _dec_empty(cls: type[Body]) -> _BodyDecoder:
    def decode_empty(version: ProtocolVersion, body: bytes) -> Body:
        _exact(body, 0, cls.__name__)
        return cls()  # type: ignore[call-arg]

    return decode_empty


def _enc_empty(version: ProtocolVersion, body: Body) -> bytes:
    return b""


_DECODERS: dict[MessageKind, _BodyDecoder] = {
    MessageKind.HELLO: lambda v, b: Hello(bytes(b)),
    MessageKind.ERROR: _dec_error,
    MessageKind.ECHO_REQUEST: lambda v, b: EchoRequest(bytes(b)),
    MessageKind.ECHO_REPLY: lambda v, b: EchoReply(bytes(b)),
    MessageKind.FEATURES_REQUEST: _dec_empty(FeaturesRequest),
    MessageKind.FEATURES_REPLY: _dec_features_reply,
    MessageKind.GET_CONFIG_REQUEST: _dec_empty(GetConfigRequest),
    MessageKind.GET_CONFIG_REPLY: _dec_switch_config(GetConfigReply),
    MessageKind.SET_CONFIG: _dec_switch_config(SetConfig),
    MessageKind.PACKET_IN: _dec_packet_in,
    MessageKind.PORT_STATUS: _dec_port_status,
    MessageKind.PACKET_OUT: _dec_packet_out,
    MessageKind.FLOW_MOD: _dec_flow_mod,
    MessageKind.MULTIPART_REQUEST: _dec_multipart(MultipartRequest),
    MessageKind.MULTIPART_REPLY: _dec_multipart(MultipartReply),
    MessageKind.BARRIER_REQUEST: _dec_empty(BarrierRequest),
    MessageKind.BARRIER_REPLY: _dec_empty(BarrierReply),
    MessageKind.ROLE_REQUEST: _dec_role(RoleRequest),
    MessageKind.ROLE_REPLY: _dec_role(RoleReply),
}

_ENCODERS: dict[MessageKind, _BodyEncoder] = {
    MessageKind.HELLO: lambda v, b: b.elements,  # type: ignore[union-attr]
    MessageKind.ERROR: _enc_error,
    MessageKind.ECHO_REQUEST: lambda v, b: b.payload,  # type: ignore[union-attr]
    MessageKind.ECHO_REPLY: lambda v, b: b.payload,  # type: ignore[union-attr]
    MessageKind.FEATURES_REQUEST: _enc_empty,
    MessageKind.FEATURES_REPLY: _enc_features_reply,
    MessageKind.GET_CONFIG_REQUEST: _enc_empty,
    MessageKind.GET_CONFIG_REPLY: _enc_switch_config,
    MessageKind.SET_CONFIG: _enc_switch_config,
    MessageKind.PACKET_IN: _enc_packet_in,
    MessageKind.PORT_STATUS: _enc_port_status,
    MessageKind.PACKET_OUT: _enc_packet_out,
    MessageKind.FLOW_MOD: _enc_flow_mod,
    MessageKind.MULTIPART_REQUEST: _enc_multipart,
    MessageKind.MULTIPART_REPLY: _enc_multipart,
    MessageKind.BARRIER_REQUEST: _enc_empty,
    MessageKind.BARRIER_REPLY: _enc_empty,
    MessageKind.ROLE_REQUEST: _enc_role,
    MessageKind.ROLE_REPLY: _enc_role,
    MessageKind.UNKNOWN: lambda v, b: b.data,  # type: ignore[union-attr]
}


# Public API


def decode(data: bytes | bytearray | memoryview) -> OfMessage:
    """Decode the first complete message in ``data``.

    Reads exactly ``header.length`` bytes; anything after is ignored.
    """
    if len(data) < OFP_HEADER_LEN:
        raise MalformedHeader(f"need {OFP_HEADER_LEN} header bytes, got {len(data)}")
    wire_version, msg_type, length, xid = HEADER.unpack_from(data)
    if length < OFP_HEADER_LEN:
        raise MalformedHeader(f"header length {length} is below {OFP_HEADER_LEN}")
    if len(data) < length:
        raise MalformedHeader(f"body truncated: header says {length}, have {len(data)}")
    body = bytes(data[OFP_HEADER_LEN:length])
    if msg_type == OFPT_HELLO and wire_version not in SUPPORTED_WIRE_VERSIONS:
        return OfMessage(_hello_version(wire_version), xid, Hello(body, wire_version))
    version = ProtocolVersion.from_wire(wire_version)
    kind = kind_of(version, msg_type)
    decoder = _DECODERS.get(kind)
    if decoder is None:
        return OfMessage(version, xid, Unknown(msg_type, body))
    return OfMessage(version, xid, decoder(version, body))


def encode(msg: OfMessage) -> bytes:
    """Encode a message; the header length is recomputed from the body."""
    body = _ENCODERS[msg.kind](msg.version, msg.body)
    length = OFP_HEADER_LEN + len(body)
    if length > OFP_MAX_LENGTH:
        raise BodyTooLarge(f"{msg.kind} would be {length} bytes (max {OFP_MAX_LENGTH})")
    wire_version = int(msg.version)
    if isinstance(msg.body, Hello) and msg.body.wire_version is not None:
        wire_version = msg.body.wire_version
    return HEADER.pack(wire_version, msg.msg_type, length, msg.xid) + body


def _split(buffer: bytes | bytearray | memoryview) -> tuple[list[bytes], int]:
    """Cut complete messages off the front of ``buffer``.

    Framing only needs the length field, so any wire version is framed and left
    to ``decode``. A bad length is only reported when no message precedes it in
    this call, so good messages are never lost: the caller gets them first and
    the error on the next call.
    """
    messages: list[bytes] = []
    offset = 0
    available = len(buffer)
    while available - offset >= OFP_HEADER_LEN:
        (length,) = struct.unpack_from("!H", buffer, offset + 2)
        if length < OFP_HEADER_LEN:
            if messages:
                break
            raise MalformedHeader(f"header length {length} is below {OFP_HEADER_LEN}")
        if available - offset < length:
            break
        messages.append(bytes(buffer[offset : offset + length]))
        offset += length
    return messages, offset


def frame_stream(buffer: bytes | bytearray | memoryview) -> tuple[list[bytes], bytes]:
    """Split a TCP byte-stream prefix into complete messages plus residual."""
    messages, consumed = _split(buffer)
    return messages, bytes(buffer[consumed:])


class MessageFramer:
    """Receive buffer for one session; ``feed`` returns complete messages."""

    def __init__(self) -> None:
        self._buffer = bytearray()

    def feed(self, data: bytes) -> list[bytes]:
        self._buffer.extend(data)
        messages, consumed = _split(self._buffer)
        if consumed:
            del self._buffer[:consumed]
        return messages

    @property
    def pending(self) -> int:
        return len(self._buffer)


def negotiate(
    ours: list[ProtocolVersion], peer_version: int, peer_elements: bytes = b""
) -> ProtocolVersion:
    """Pick the highest version both sides support.

    Without a version bitmap the peer is assumed to speak everything up to its
    header version.
    """
    advertised = hello_versions(peer_version, peer_elements)
    if peer_elements and advertised != {peer_version}:
        common = {int(v) for v in ours} & advertised
    else:
        common = {int(v) for v in ours if int(v) <= peer_version}
    if not common:
        raise VersionMismatch(
            f"peer advertises {sorted(advertised)}, we support {[v.label for v in ours]}"
        )
    return ProtocolVersion(max(common))


__all__ = [
    "MessageFramer",
    "OfHeader",
    "OfMessage",
    "decode",
    "decode_port_desc",
    "encode",
    "encode_port_desc",
    "frame_stream",
    "negotiate",
    "port_size",
]
