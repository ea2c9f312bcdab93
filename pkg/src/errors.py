"""Exception hierarchy for sdnbench.

Every error raised on purpose by the harness derives from ``BenchError`` so the
CLI can map outcomes to exit codes in one place.
"""

from typing import Any


class BenchError(Exception):
    """Base class for all harness errors."""


# Codec


class CodecError(BenchError):
    """Raised when bytes cannot be turned into an OpenFlow message."""


class MalformedMessage(CodecError):
    """Body does not fit the fixed layout of its message type."""


class MalformedHeader(MalformedMessage):
    """Header length below 8 bytes or body shorter than header.length."""


class UnsupportedVersion(CodecError):
    """Wire version is neither 0x01 (1.0) nor 0x04 (1.3)."""

    def __init__(self, wire_value: int):
        super().__init__(f"unsupported OpenFlow wire version 0x{wire_value:02x}")
        self.wire_value = wire_value


class BodyTooLarge(CodecError):
    """Encoded message exceeds the 16-bit length field."""


# Topology


class TopologyError(BenchError):
    """Raised for invalid topology specs and queries."""


class DuplicatePortAssignment(TopologyError):
    pass


class DisconnectedGraph(TopologyError):
    pass


class UnknownSwitchReference(TopologyError):
    pass


class UnknownSwitch(TopologyError):
    pass


class UnknownHost(TopologyError):
    pass


class NoPath(TopologyError):
    pass


# Switch sessions


class SessionError(BenchError):
    """Raised by emulated switch sessions."""


class ConnectRefused(SessionError):
    pass


class HandshakeTimeout(SessionError):
    pass


class VersionMismatch(SessionError):
    pass


class SessionNotReady(SessionError):
    pass


class BackpressureTimeout(SessionError):
    pass


class EchoTimeout(SessionError):
    pass


class NoBackupEndpoint(SessionError):
    pass


# Traffic


class TrafficError(BenchError):
    pass


class LengthTooSmall(TrafficError):
    pass


# Measurement


class MeasurementError(BenchError):
    """Raised when a benchmark procedure cannot produce a measurement."""


class ControllerUnreachable(MeasurementError):
    pass


class ZeroResponses(MeasurementError):
    pass


class ProvisionTimeout(MeasurementError):
    pass


class DiscoveryTimeout(MeasurementError):
    """Not every directed link was probed before the deadline."""

    def __init__(self, message: str, probed: dict[str, bool]):
        super().__init__(message)
        self.probed = probed

    @property
    def missing(self) -> list[str]:
        return [link for link, seen in self.probed.items() if not seen]


class UnsupportedPlatform(MeasurementError):
    pass


# Reports


class ReportError(BenchError):
    pass


class EmptySamples(ReportError):
    pass


class IoFailure(ReportError):
    pass


class IncomparablePlans(ReportError):
    pass


# Configuration and CLI


class ConfigError(BenchError):
    """Invalid configuration; ``location`` points at the offending input."""

    def __init__(self, message: str, location: str | None = None):
        text = f"{location}: {message}" if location else message
        super().__init__(text)
        self.location = location


class UnknownFlag(ConfigError):
    pass


class MissingController(ConfigError):
    def __init__(self, message: str = "no controller endpoint given", **kwargs: Any):
        super().__init__(message, **kwargs)


class ConflictingOptions(ConfigError):
    pass


# Reference controller


class BindFailure(BenchError):
    pass
