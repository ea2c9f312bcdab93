"""OpenFlow 1.0 / 1.3 wire constants used by the codec and the emulator."""

from enum import IntEnum, StrEnum

from errors import UnsupportedVersion

OFP_HEADER_LEN = 8
OFP_MAX_LENGTH = 0xFFFF
OFP_NO_BUFFER = 0xFFFFFFFF
OFP_DEFAULT_PRIORITY = 0x8000


class ProtocolVersion(IntEnum):
    """Supported OpenFlow versions keyed by their wire value."""

    V1_0 = 0x01
    V1_3 = 0x04

    @classmethod
    def from_wire(cls, value: int) -> "ProtocolVersion":
        try:
            return cls(value)
        except ValueError:
            raise UnsupportedVersion(value) from None

    @classmethod
    def parse(cls, text: str) -> "ProtocolVersion":
        """Accept ``1.0``/``1.3`` (as typed on the command line) or a wire value."""
        normalized = text.strip().lower().removeprefix("of")
        if normalized in ("1.0", "10", "1"):
            return cls.V1_0
        if normalized in ("1.3", "13", "4"):
            return cls.V1_3
        raise ValueError(f"unknown OpenFlow version '{text}'")

    @property
    def label(self) -> str:
        return "1.0" if self is ProtocolVersion.V1_0 else "1.3"


class MessageKind(StrEnum):
    HELLO = "hello"
    ERROR = "error"
    ECHO_REQUEST = "echo_request"
    ECHO_REPLY = "echo_reply"
    FEATURES_REQUEST = "features_request"
    FEATURES_REPLY = "features_reply"
    GET_CONFIG_REQUEST = "get_config_request"
    GET_CONFIG_REPLY = "get_config_reply"
    SET_CONFIG = "set_config"
    PACKET_IN = "packet_in"
    PORT_STATUS = "port_status"
    PACKET_OUT = "packet_out"
    FLOW_MOD = "flow_mod"
    MULTIPART_REQUEST = "multipart_request"
    MULTIPART_REPLY = "multipart_reply"
    BARRIER_REQUEST = "barrier_request"
    BARRIER_REPLY = "barrier_reply"
    ROLE_REQUEST = "role_request"
    ROLE_REPLY = "role_reply"
    UNKNOWN = "unknown"


# Wire type codes. Both versions agree up to FLOW_MOD; they diverge afterwards.
_COMMON_TYPES: dict[MessageKind, int] = {
    MessageKind.HELLO: 0,
    MessageKind.ERROR: 1,
    MessageKind.ECHO_REQUEST: 2,
    MessageKind.ECHO_REPLY: 3,
    MessageKind.FEATURES_REQUEST: 5,
    MessageKind.FEATURES_REPLY: 6,
    MessageKind.GET_CONFIG_REQUEST: 7,
    MessageKind.GET_CONFIG_REPLY: 8,
    MessageKind.SET_CONFIG: 9,
    MessageKind.PACKET_IN: 10,
    MessageKind.PORT_STATUS: 12,
    MessageKind.PACKET_OUT: 13,
    MessageKind.FLOW_MOD: 14,
}

MESSAGE_TYPES: dict[ProtocolVersion, dict[MessageKind, int]] = {
    ProtocolVersion.V1_0: {
        **_COMMON_TYPES,
        MessageKind.BARRIER_REQUEST: 18,
        MessageKind.BARRIER_REPLY: 19,
    },
    ProtocolVersion.V1_3: {
        **_COMMON_TYPES,
        MessageKind.MULTIPART_REQUEST: 18,
        MessageKind.MULTIPART_REPLY: 19,
        MessageKind.BARRIER_REQUEST: 20,
        MessageKind.BARRIER_REPLY: 21,
        MessageKind.ROLE_REQUEST: 24,
        MessageKind.ROLE_REPLY: 25,
    },
}

MESSAGE_KINDS: dict[ProtocolVersion, dict[int, MessageKind]] = {
    version: {code: kind for kind, code in table.items()}
    for version, table in MESSAGE_TYPES.items()
}


def kind_of(version: ProtocolVersion, msg_type: int) -> MessageKind:
    return MESSAGE_KINDS[version].get(msg_type, MessageKind.UNKNOWN)


def type_code(version: ProtocolVersion, kind: MessageKind) -> int:
    try:
        return MESSAGE_TYPES[version][kind]
    except KeyError:
        raise ValueError(f"{kind} does not exist in OpenFlow {version.label}") from None


# Reserved port numbers, per version.
class Port10(IntEnum):
    MAX = 0xFF00
    IN_PORT = 0xFFF8
    TABLE = 0xFFF9
    NORMAL = 0xFFFA
    FLOOD = 0xFFFB
    ALL = 0xFFFC
    CONTROLLER = 0xFFFD
    LOCAL = 0xFFFE
    NONE = 0xFFFF


class Port13(IntEnum):
    MAX = 0xFFFFFF00
    IN_PORT = 0xFFFFFFF8
    TABLE = 0xFFFFFFF9
    NORMAL = 0xFFFFFFFA
    FLOOD = 0xFFFFFFFB
    ALL = 0xFFFFFFFC
    CONTROLLER = 0xFFFFFFFD
    LOCAL = 0xFFFFFFFE
    ANY = 0xFFFFFFFF


def flood_port(version: ProtocolVersion) -> int:
    return Port10.FLOOD if version is ProtocolVersion.V1_0 else Port13.FLOOD


def is_reserved_port(version: ProtocolVersion, port_no: int) -> bool:
    limit = Port10.MAX if version is ProtocolVersion.V1_0 else Port13.MAX
    return port_no >= limit


class PacketInReason(IntEnum):
    NO_MATCH = 0
    ACTION = 1
    INVALID_TTL = 2


class FlowModCommand(IntEnum):
    ADD = 0
    MODIFY = 1
    MODIFY_STRICT = 2
    DELETE = 3
    DELETE_STRICT = 4


class PortStatusReason(IntEnum):
    ADD = 0
    DELETE = 1
    MODIFY = 2


class PortState(IntEnum):
    LIVE = 0  # no flags set
    LINK_DOWN = 1


class ErrorType(IntEnum):
    HELLO_FAILED = 0
    BAD_REQUEST = 1


# FLOW_MOD_FAILED / ALL_TABLES_FULL differ between versions.
FLOW_MOD_FAILED: dict[ProtocolVersion, tuple[int, int]] = {
    ProtocolVersion.V1_0: (3, 0),
    ProtocolVersion.V1_3: (5, 1),
}

HELLO_FAILED_INCOMPATIBLE = 0


class MultipartType(IntEnum):
    DESC = 0
    FLOW = 1
    AGGREGATE = 2
    TABLE = 3
    PORT_STATS = 4
    QUEUE = 5
    GROUP = 6
    GROUP_DESC = 7
    GROUP_FEATURES = 8
    METER = 9
    METER_CONFIG = 10
    METER_FEATURES = 11
    TABLE_FEATURES = 12
    PORT_DESC = 13
    EXPERIMENTER = 0xFFFF


class ControllerRole(IntEnum):
    NOCHANGE = 0
    EQUAL = 1
    MASTER = 2
    SLAVE = 3


# 1.0 ofp_match wildcard bits
OFPFW_IN_PORT = 1 << 0
OFPFW_DL_SRC = 1 << 2
OFPFW_DL_DST = 1 << 3
OFPFW_DL_TYPE = 1 << 4
OFPFW_ALL = (1 << 22) - 1

# 1.3 OXM
OFPMT_OXM = 1
OFPXMC_OPENFLOW_BASIC = 0x8000
OXM_IN_PORT = 0
OXM_ETH_DST = 3
OXM_ETH_SRC = 4
OXM_ETH_TYPE = 5

# Action / instruction types
OFPAT_OUTPUT = 0
OFPIT_APPLY_ACTIONS = 4

# Hello element carrying the version bitmap (1.3)
OFPHET_VERSIONBITMAP = 1

ETH_TYPE_IPV4 = 0x0800
ETH_TYPE_ARP = 0x0806
ETH_TYPE_LLDP = 0x88CC
ETH_TYPE_BDDP = 0x8999
DISCOVERY_ETH_TYPES = frozenset({ETH_TYPE_LLDP, ETH_TYPE_BDDP})
