"""
Emulated OpenFlow switches.

``SwitchSession`` runs one control connection: handshake, query answers,
FlowMod/PacketOut accounting and PacketIn injection. ``Fleet`` owns every
session of a run and relays discovery probes between them along the topology.
"""

import asyncio
import itertools
import logging
import struct
import time
from collections import deque
from collections.abc import Callable
from dataclasses import dataclass, field, replace
from enum import IntEnum, StrEnum
from typing import Any, Protocol

from errors import (
    BackpressureTimeout,
    CodecError,
    ConnectRefused,
    EchoTimeout,
    HandshakeTimeout,
    NoBackupEndpoint,
    SessionError,
    SessionNotReady,
    VersionMismatch,
)
from models import SessionCounters
from openflow.codec import (
    MessageFramer,
    OfMessage,
    decode,
    encode,
    encode_port_desc,
    negotiate,
)
from openflow.constants import (
    FLOW_MOD_FAILED,
    HELLO_FAILED_INCOMPATIBLE,
    OFP_NO_BUFFER,
    ErrorType,
    FlowModCommand,
    MessageKind,
    MultipartType,
    PacketInReason,
    Port10,
    Port13,
    PortState,
    PortStatusReason,
    ProtocolVersion,
)
from openflow.messages import (
    BarrierReply,
    BarrierRequest,
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
    OxmMatch,
    PacketIn,
    PacketOut,
    Port,
    PortStatus,
    RoleReply,
    RoleRequest,
    SetConfig,
    StandardMatch,
    hello_bitmap_element,
    output_ports,
)
from topology import PortRef, Topology, format_port, host_mac
from traffic import is_discovery_frame

logger = logging.getLogger(__name__)

clock = time.perf_counter

SYNC_PREFIX = b"SBsy"
PROBE_PREFIX = b"SBrt"

# Capabilities advertised in FeaturesReply: flow, table and port stats.
CAPABILITIES = 0x7
ACTIONS_10 = 0xFFF


class SessionPhase(IntEnum):
    TCP_CONNECTED = 1
    HELLO_EXCHANGED = 2
    FEATURES_ANSWERED = 3
    READY = 4
    CLOSED = 5


class SessionEvent(StrEnum):
    """What ``handle_controller_message`` did with a message."""

    HANDSHAKE = "handshake"
    ANSWERED = "answered"
    KEEPALIVE = "keepalive"
    RESPONSE = "response"
    FOLDED = "folded"
    FLOW_REJECTED = "flow_rejected"
    DISCOVERY_RELAYED = "discovery_relayed"
    SYNC_REPLY = "sync_reply"
    IGNORED = "ignored"


@dataclass(frozen=True, slots=True)
class SwitchConfig:
    datapath_id: int
    n_ports: int
    mac_pool: tuple[bytes, ...]
    buffer_size: int = 256
    flow_table_capacity: int = 65536

    def __post_init__(self) -> None:
        if not self.mac_pool:
            raise ValueError("mac_pool must hold at least one address")
        if self.flow_table_capacity < 1:
            raise ValueError("flow_table_capacity must be at least 1")


@dataclass(frozen=True, slots=True)
class SessionOptions:
    """Settings shared by every session of a fleet."""

    versions: tuple[ProtocolVersion, ...] = (ProtocolVersion.V1_3, ProtocolVersion.V1_0)
    handshake_timeout: float = 5.0
    backpressure_timeout: float = 5.0
    echo_timeout: float = 2.0
    strict_matching: bool = False
    bind_address: str | None = None


@dataclass(frozen=True, slots=True)
class ResponseEvent:
    at: float
    buffer_id: int | None
    kind: MessageKind
    flow_mod: FlowMod | None = None


@dataclass
class SessionState:
    phase: SessionPhase = SessionPhase.TCP_CONNECTED
    negotiated_version: ProtocolVersion | None = None
    counters: SessionCounters = field(default_factory=lambda: SessionCounters(datapath_id=0))

    def advance(self, phase: SessionPhase) -> None:
        if phase is not SessionPhase.CLOSED and phase < self.phase:
            raise SessionError(f"phase cannot move from {self.phase.name} to {phase.name}")
        self.phase = phase


@dataclass(frozen=True, slots=True)
class FlowEntry:
    match: Match
    priority: int
    instructions: bytes
    installed_at: float


class FlowTable:
    """Capacity-bounded store of flow entries keyed by (match, priority)."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.entries: dict[tuple[Match, int], FlowEntry] = {}
        self.rejected = 0

    def __len__(self) -> int:
        return len(self.entries)

    def apply(self, flow_mod: FlowMod, now: float) -> bool:
        """Apply a FlowMod; False when an insertion is refused for lack of space."""
        key = (flow_mod.match, flow_mod.priority)
        command = flow_mod.command
        if command in (FlowModCommand.DELETE, FlowModCommand.DELETE_STRICT):
            if _matches_everything(flow_mod.match):
                self.entries.clear()
            elif command == FlowModCommand.DELETE_STRICT:
                self.entries.pop(key, None)
            else:
                for existing in [k for k in self.entries if k[0] == flow_mod.match]:
                    del self.entries[existing]
            return True
        if key not in self.entries and len(self.entries) >= self.capacity:
            self.rejected += 1
            return False
        self.entries[key] = FlowEntry(flow_mod.match, flow_mod.priority, flow_mod.instructions, now)
        return True


def _matches_everything(match: Match) -> bool:
    if isinstance(match, StandardMatch):
        return match == StandardMatch()
    return match == OxmMatch()


class Channel(Protocol):
    """Outbound half of a control connection."""

    def write(self, data: bytes) -> None: ...

    async def drain(self) -> None: ...

    def abort(self) -> None: ...


class StreamChannel:
    def __init__(self, writer: asyncio.StreamWriter):
        self._writer = writer

    def write(self, data: bytes) -> None:
        self._writer.write(data)

    async def drain(self) -> None:
        await self._writer.drain()

    def abort(self) -> None:
        self._writer.transport.abort()


def split_endpoint(endpoint: str) -> tuple[str, int]:
    """``host:port`` (or ``[v6]:port``) into a (host, port) tuple."""
    host, sep, port = endpoint.rpartition(":")
    if not sep or not host:
        raise ValueError(f"endpoint '{endpoint}' is not host:port")
    return host.strip("[]"), int(port)


RelayFn = Callable[[int, int, bytes], None]
ResponseListener = Callable[[ResponseEvent], None]


class SwitchSession:
    """One emulated switch and its control connection."""

    def __init__(
        self,
        cfg: SwitchConfig,
        endpoints: list[str],
        options: SessionOptions | None = None,
        relay: RelayFn | None = None,
    ):
        if not endpoints:
            raise ValueError("a session needs at least one controller endpoint")
        self.cfg = cfg
        self.endpoints = list(endpoints)
        self.options = options or SessionOptions()
        self.relay = relay
        self.flow_table = FlowTable(cfg.flow_table_capacity)
        self.counters = SessionCounters(datapath_id=cfg.datapath_id)
        self.state = SessionState(counters=self.counters)
        self.endpoint_index = 0
        self.miss_send_len = 128
        self.ports = [self._port(n) for n in range(1, cfg.n_ports + 1)]

        self._channel: Channel | None = None
        self._reader_task: asyncio.Task[None] | None = None
        self._framer = MessageFramer()
        self._xids = itertools.count(1)
        self._buffer_ids = itertools.cycle(range(cfg.buffer_size)) if cfg.buffer_size else None
        self._ready: asyncio.Future[None] | None = None
        self._first_after_ready: asyncio.Future[float] | None = None
        self._last_flow_mod_buffer: int | None = None
        self._waiters: deque[tuple[int | None, asyncio.Future[ResponseEvent]]] = deque()
        self._echo_waiters: dict[bytes, asyncio.Future[float]] = {}
        self._echo_seq = itertools.count()
        self._listeners: list[ResponseListener] = []
        self._generation = 0
        self.ready_at: float | None = None

    def __str__(self) -> str:
        return f"s{self.cfg.datapath_id}"

    @property
    def phase(self) -> SessionPhase:
        return self.state.phase

    @property
    def version(self) -> ProtocolVersion:
        return self.state.negotiated_version or max(self.options.versions)

    @property
    def is_ready(self) -> bool:
        return self.state.phase is SessionPhase.READY

    def _port(self, port_no: int) -> Port:
        return Port(
            port_no=port_no,
            hw_addr=host_mac(self.cfg.datapath_id, 0xFE00 | (port_no & 0xFF)),
            name=f"s{self.cfg.datapath_id}-eth{port_no}",
            curr=0x840,  # 10GB_FD | COPPER (1.0 bit layout)
            curr_speed=10_000_000,
            max_speed=10_000_000,
        )

    def add_listener(self, listener: ResponseListener) -> None:
        self._listeners.append(listener)

    def remove_listener(self, listener: ResponseListener) -> None:
        self._listeners.remove(listener)

    # Connection management

    async def run_session(self) -> None:
        """Connect to the current endpoint and complete the handshake."""
        endpoint = self.endpoints[self.endpoint_index]
        host, port = split_endpoint(endpoint)
        local_addr = (self.options.bind_address, 0) if self.options.bind_address else None
        try:
            async with asyncio.timeout(self.options.handshake_timeout):
                reader, writer = await asyncio.open_connection(
                    host, port, local_addr=local_addr
                )
        except TimeoutError:
            raise HandshakeTimeout(f"{self}: connect to {endpoint} timed out") from None
        except OSError as error:
            raise ConnectRefused(f"{self}: cannot connect to {endpoint}: {error}") from error

        self.attach(StreamChannel(writer))
        self._reader_task = asyncio.create_task(
            self._read_loop(reader, self._generation), name=f"{self}-reader"
        )
        await self.wait_ready()

    def attach(self, channel: Channel) -> None:
        """Start a fresh connection on ``channel`` and send our Hello."""
        loop = asyncio.get_running_loop()
        self._generation += 1
        self._channel = channel
        self._framer = MessageFramer()
        self.ready_at = None
        self._last_flow_mod_buffer = None
        self.state = SessionState(counters=self.counters)
        self._ready = loop.create_future()
        self._first_after_ready = loop.create_future()
        versions = sorted(self.options.versions)
        elements = hello_bitmap_element(versions) if max(versions) >= ProtocolVersion.V1_3 else b""
        self._send(OfMessage(max(versions), next(self._xids), Hello(elements)))

    async def wait_ready(self) -> None:
        assert self._ready is not None
        try:
            await asyncio.wait_for(asyncio.shield(self._ready), self.options.handshake_timeout)
        except TimeoutError:
            self.close()
            raise HandshakeTimeout(
                f"{self}: no handshake within {self.options.handshake_timeout}s"
            ) from None

    async def _read_loop(self, reader: asyncio.StreamReader, generation: int) -> None:
        try:
            while data := await reader.read(65536):
                self.receive(data)
        except (ConnectionError, CodecError) as error:
            logger.debug("%s: connection lost: %s", self, error)
        finally:
            # A replaced connection must not close its successor.
            if generation == self._generation:
                self._mark_closed(ConnectRefused(f"{self}: controller closed the connection"))

    def _mark_closed(self, reason: BaseException) -> None:
        self.state.advance(SessionPhase.CLOSED)
        pending: list[asyncio.Future[Any] | None] = [self._ready, self._first_after_ready]
        pending.extend(waiter for _, waiter in self._waiters)
        pending.extend(self._echo_waiters.values())
        for future in pending:
            if future is not None and not future.done():
                future.set_exception(reason)
                future.exception()  # consumed here when nobody awaits it
        self._waiters.clear()
        self._echo_waiters.clear()

    def close(self) -> None:
        """Abort the connection immediately."""
        if self._channel is not None:
            self._channel.abort()
        if self._reader_task is not None:
            self._reader_task.cancel()
            self._reader_task = None
        if self.state.phase is not SessionPhase.CLOSED:
            self._mark_closed(ConnectRefused(f"{self}: closed locally"))

    async def fail_over(self) -> float:
        """Drop the current controller and hand over to the next endpoint.

        Returns the time from the abort until the first control message the new
        controller sends after the handshake.
        """
        if len(self.endpoints) < 2:
            raise NoBackupEndpoint(f"{self}: only one controller endpoint configured")
        if not self.is_ready:
            raise SessionNotReady(f"{self}: fail_over needs a Ready session")
        self.close()
        started = clock()
        self.endpoint_index = (self.endpoint_index + 1) % len(self.endpoints)
        await self.run_session()
        assert self._first_after_ready is not None
        remaining = self.options.handshake_timeout - (clock() - started)
        try:
            first = await asyncio.wait_for(
                asyncio.shield(self._first_after_ready), max(remaining, 0.001)
            )
        except TimeoutError:
            raise HandshakeTimeout(
                f"{self}: backup sent nothing after the handshake"
            ) from None
        return first - started

    # Outbound

    def _send(self, msg: OfMessage) -> None:
        if self._channel is None:
            raise SessionNotReady(f"{self}: no connection")
        self._channel.write(encode(msg))

    async def _flush(self) -> None:
        assert self._channel is not None
        try:
            await asyncio.wait_for(self._channel.drain(), self.options.backpressure_timeout)
        except TimeoutError:
            raise BackpressureTimeout(
                f"{self}: socket unwritable for {self.options.backpressure_timeout}s"
            ) from None
        except ConnectionError as error:
            raise ConnectRefused(f"{self}: connection lost: {error}") from error

    def next_buffer_id(self) -> int:
        return next(self._buffer_ids) if self._buffer_ids is not None else OFP_NO_BUFFER

    async def inject_packet_in(
        self, frame: bytes, in_port: int, buffer_id: int | None = None
    ) -> float:
        """Send a table-miss PacketIn carrying ``frame``; returns the send time."""
        if not self.is_ready:
            raise SessionNotReady(f"{self}: PacketIn before the handshake completed")
        if buffer_id is None:
            buffer_id = self.next_buffer_id()
        body = PacketIn(
            buffer_id=buffer_id,
            total_len=len(frame),
            in_port=in_port,
            reason=PacketInReason.NO_MATCH,
            data=frame,
        )
        sent_at = clock()
        self._send(OfMessage(self.version, next(self._xids), body))
        self.counters.packet_in_sent += 1
        await self._flush()
        return sent_at

    def inject_discovery(self, frame: bytes, in_port: int) -> None:
        if not self.is_ready:
            return
        body = PacketIn(OFP_NO_BUFFER, len(frame), in_port, PacketInReason.NO_MATCH, frame)
        self._send(OfMessage(self.version, next(self._xids), body))
        self.counters.discovery_packet_ins_sent += 1

    def send_port_status(self, port_no: int, link_down: bool) -> None:
        port = self.ports[port_no - 1]
        state = PortState.LINK_DOWN if link_down else PortState.LIVE
        status = PortStatus(PortStatusReason.MODIFY, replace(port, state=int(state)))
        self._send(OfMessage(self.version, next(self._xids), status))

    async def _echo(self, prefix: bytes) -> tuple[bytes, asyncio.Future[float], float]:
        if not self.is_ready:
            raise SessionNotReady(f"{self}: echo before the handshake completed")
        payload = prefix + struct.pack("!Q", next(self._echo_seq))
        future: asyncio.Future[float] = asyncio.get_running_loop().create_future()
        self._echo_waiters[payload] = future
        sent_at = clock()
        self._send(OfMessage(self.version, next(self._xids), EchoRequest(payload)))
        await self._flush()
        return payload, future, sent_at

    async def measure_echo_rtt(self, timeout: float | None = None) -> float:
        """Round trip of one switch-initiated EchoRequest."""
        payload, future, sent_at = await self._echo(PROBE_PREFIX)
        try:
            received_at = await asyncio.wait_for(future, timeout or self.options.echo_timeout)
        except TimeoutError:
            raise EchoTimeout(f"{self}: no EchoReply within the timeout") from None
        finally:
            self._echo_waiters.pop(payload, None)
        rtt = received_at - sent_at
        self.counters.echo_rtts.append(rtt)
        return rtt

    async def send_sync_request(self) -> float:
        """Fire a sync (Echo) request without waiting; returns the send time."""
        await self._echo(SYNC_PREFIX)
        self.counters.sync_requests_sent += 1
        return clock()

    def expect_response(self, buffer_id: int | None = None) -> asyncio.Future[ResponseEvent]:
        """Register interest in the next response unit before the request goes out.

        In strict mode only the response carrying ``buffer_id`` resolves the future.
        """
        future: asyncio.Future[ResponseEvent] = asyncio.get_running_loop().create_future()
        self._waiters.append((buffer_id if self.options.strict_matching else None, future))
        return future

    async def await_response(
        self, future: asyncio.Future[ResponseEvent], timeout: float
    ) -> ResponseEvent:
        try:
            return await asyncio.wait_for(future, timeout)
        finally:
            for entry in [e for e in self._waiters if e[1] is future]:
                self._waiters.remove(entry)

    async def wait_response(
        self, timeout: float, buffer_id: int | None = None
    ) -> ResponseEvent:
        """Wait for the next response unit (or the one for ``buffer_id`` in strict mode)."""
        return await self.await_response(self.expect_response(buffer_id), timeout)

    async def sync_round_trip(self, timeout: float) -> float:
        """Round trip of one sync (Echo) request."""
        payload, future, sent_at = await self._echo(SYNC_PREFIX)
        self.counters.sync_requests_sent += 1
        try:
            received_at = await asyncio.wait_for(future, timeout)
        except TimeoutError:
            raise EchoTimeout(f"{self}: no sync reply within {timeout}s") from None
        finally:
            self._echo_waiters.pop(payload, None)
        return received_at - sent_at

    async def wait_settled(self, timeout: float) -> float:
        """Wait for the first controller message after Ready; returns its arrival time."""
        if self._first_after_ready is None:
            raise SessionNotReady(f"{self}: no connection")
        try:
            return await asyncio.wait_for(asyncio.shield(self._first_after_ready), timeout)
        except TimeoutError:
            raise HandshakeTimeout(f"{self}: controller silent after the handshake") from None

    def snapshot(self) -> SessionCounters:
        return self.counters.model_copy(deep=True)

    # Inbound

    def receive(self, data: bytes) -> list[SessionEvent]:
        """Feed raw bytes from the controller; returns one event per message."""
        events = []
        for raw in self._framer.feed(data):
            try:
                msg = decode(raw)
            except CodecError as error:
                logger.debug("%s: undecodable message: %s", self, error)
                self.counters.unknown_messages += 1
                continue
            events.append(self.handle_controller_message(msg))
        return events

    def handle_controller_message(self, msg: OfMessage) -> SessionEvent:
        now = clock()
        phase = self.state.phase
        if phase is SessionPhase.CLOSED:
            return SessionEvent.IGNORED
        if phase is SessionPhase.TCP_CONNECTED:
            if isinstance(msg.body, Hello):
                return self._on_hello(msg)
            logger.debug("%s: %s before Hello ignored", self, msg.kind)
            return SessionEvent.IGNORED

        if phase is SessionPhase.READY and self._first_after_ready is not None:
            if not self._first_after_ready.done():
                self._first_after_ready.set_result(now)

        body = msg.body
        previous_flow_mod_buffer = self._last_flow_mod_buffer
        self._last_flow_mod_buffer = None

        match body:
            case FeaturesRequest():
                return self._on_features_request(msg)
            case EchoRequest(payload=payload):
                self._reply(msg, EchoReply(payload))
                self.counters.keepalives_answered += 1
                return SessionEvent.KEEPALIVE
            case EchoReply(payload=payload):
                return self._on_echo_reply(payload, now)
            case FlowMod():
                return self._on_flow_mod(msg, body, now)
            case PacketOut():
                return self._on_packet_out(body, previous_flow_mod_buffer, now)
            case GetConfigRequest():
                self._reply(msg, GetConfigReply(0, self.miss_send_len))
                return SessionEvent.ANSWERED
            case SetConfig(miss_send_len=miss_send_len):
                self.miss_send_len = miss_send_len
                return SessionEvent.ANSWERED
            case BarrierRequest():
                self._reply(msg, BarrierReply())
                return SessionEvent.ANSWERED
            case RoleRequest(role=role, generation_id=generation_id):
                self._reply(msg, RoleReply(role, generation_id))
                return SessionEvent.ANSWERED
            case MultipartRequest(mp_type=MultipartType.PORT_DESC):
                reply = MultipartReply(MultipartType.PORT_DESC, 0, encode_port_desc(self.ports))
                self._reply(msg, reply)
                return SessionEvent.ANSWERED
            case ErrorMsg():
                self.counters.errors_received += 1
                return SessionEvent.IGNORED
            case Hello():
                return SessionEvent.IGNORED
        self.counters.unknown_messages += 1
        return SessionEvent.IGNORED

    def _reply(self, request: OfMessage, body: object) -> None:
        self._send(OfMessage(self.version, request.xid, body))  # type: ignore[arg-type]

    def _on_hello(self, msg: OfMessage) -> SessionEvent:
        hello = msg.body
        assert isinstance(hello, Hello)
        try:
            peer = hello.wire_version or int(msg.version)
            version = negotiate(list(self.options.versions), peer, hello.elements)
        except VersionMismatch as error:
            self._send(
                OfMessage(
                    msg.version,
                    msg.xid,
                    ErrorMsg(ErrorType.HELLO_FAILED, HELLO_FAILED_INCOMPATIBLE, b"incompatible"),
                )
            )
            self._fail_handshake(error)
            return SessionEvent.IGNORED
        self.state.negotiated_version = version
        self.state.advance(SessionPhase.HELLO_EXCHANGED)
        return SessionEvent.HANDSHAKE

    def _fail_handshake(self, error: Exception) -> None:
        if self._ready is not None and not self._ready.done():
            self._ready.set_exception(error)
        if self._channel is not None:
            self._channel.abort()
        self.state.advance(SessionPhase.CLOSED)

    def _on_features_request(self, msg: OfMessage) -> SessionEvent:
        ports = tuple(self.ports) if self.version is ProtocolVersion.V1_0 else ()
        reply = FeaturesReply(
            datapath_id=self.cfg.datapath_id,
            n_buffers=self.cfg.buffer_size,
            n_tables=1,
            capabilities=CAPABILITIES,
            reserved=ACTIONS_10 if self.version is ProtocolVersion.V1_0 else 0,
            ports=ports,
        )
        self._reply(msg, reply)
        if self.state.phase < SessionPhase.READY:
            self.state.advance(SessionPhase.FEATURES_ANSWERED)
            self.state.advance(SessionPhase.READY)
            self.ready_at = clock()
            if self._ready is not None and not self._ready.done():
                self._ready.set_result(None)
            logger.debug("%s: ready (OpenFlow %s)", self, self.version.label)
        return SessionEvent.HANDSHAKE

    def _on_echo_reply(self, payload: bytes, now: float) -> SessionEvent:
        waiter = self._echo_waiters.pop(payload, None)
        if waiter is not None and not waiter.done():
            waiter.set_result(now)
        if payload.startswith(SYNC_PREFIX):
            self.counters.sync_replies_received += 1
            self._emit(ResponseEvent(now, None, MessageKind.ECHO_REPLY))
            return SessionEvent.SYNC_REPLY
        return SessionEvent.ANSWERED

    def _on_flow_mod(self, msg: OfMessage, flow_mod: FlowMod, now: float) -> SessionEvent:
        self.counters.flow_mods_received += 1
        accepted = self.flow_table.apply(flow_mod, now)
        if not accepted:
            self.counters.flow_mods_rejected += 1
            err_type, code = FLOW_MOD_FAILED[self.version]
            self._reply(msg, ErrorMsg(err_type, code, encode(msg)[:64]))
        self._last_flow_mod_buffer = flow_mod.buffer_id
        self._count_response(ResponseEvent(now, flow_mod.buffer_id, MessageKind.FLOW_MOD, flow_mod))
        return SessionEvent.RESPONSE if accepted else SessionEvent.FLOW_REJECTED

    def _on_packet_out(
        self, packet_out: PacketOut, previous_flow_mod_buffer: int | None, now: float
    ) -> SessionEvent:
        if is_discovery_frame(packet_out.data):
            self.counters.discovery_probes_received += 1
            self._relay_probe(packet_out)
            return SessionEvent.DISCOVERY_RELAYED
        self.counters.packet_outs_received += 1
        previous = previous_flow_mod_buffer
        if previous is not None and packet_out.buffer_id == previous:
            return SessionEvent.FOLDED
        self._count_response(ResponseEvent(now, packet_out.buffer_id, MessageKind.PACKET_OUT))
        return SessionEvent.RESPONSE

    def _relay_probe(self, packet_out: PacketOut) -> None:
        if self.relay is None:
            return
        flood = {int(Port10.FLOOD), int(Port10.ALL), int(Port13.FLOOD), int(Port13.ALL)}
        for port in output_ports(self.version, packet_out.actions):
            if port in flood:
                for out in range(1, self.cfg.n_ports + 1):
                    if out != packet_out.in_port:
                        self.relay(self.cfg.datapath_id, out, packet_out.data)
            elif 1 <= port <= self.cfg.n_ports:
                self.relay(self.cfg.datapath_id, port, packet_out.data)

    def _count_response(self, event: ResponseEvent) -> None:
        self.counters.responses_received += 1
        self.counters.last_response_at = event.at
        self._emit(event)

    def _emit(self, event: ResponseEvent) -> None:
        for index, (wanted, future) in enumerate(self._waiters):
            if future.done():
                continue
            if wanted is None or wanted == event.buffer_id:
                future.set_result(event)
                del self._waiters[index]
                break
        for listener in self._listeners:
            listener(event)


class Fleet:
    """All switch sessions of one run, wired together by the topology."""

    def __init__(
        self,
        topology: Topology,
        endpoints: list[str],
        options: SessionOptions | None = None,
        buffer_size: int = 256,
        flow_table_capacity: int = 65536,
    ):
        self.topology = topology
        self.endpoints = list(endpoints)
        self.options = options or SessionOptions()
        self.sessions: dict[int, SwitchSession] = {}
        self.removed: set[PortRef] = set()
        self.suppressed: set[PortRef] = set()
        self.probe_log: dict[tuple[PortRef, PortRef], list[float]] = {}
        self.port_probes: dict[PortRef, list[float]] = {}
        self.failures: dict[int, BaseException] = {}
        for dpid in topology.switches:
            cfg = SwitchConfig(
                datapath_id=dpid,
                n_ports=len(topology.ports_of(dpid)),
                mac_pool=self.mac_pool(dpid),
                buffer_size=buffer_size,
                flow_table_capacity=flow_table_capacity,
            )
            self.sessions[dpid] = SwitchSession(cfg, self.endpoints, self.options, self.relay)

    def mac_pool(self, dpid: int) -> tuple[bytes, ...]:
        hosts = self.topology.hosts_on(dpid)
        if hosts:
            return tuple(host.mac for host in hosts)
        return (host_mac(dpid, 0),)

    def __len__(self) -> int:
        return len(self.sessions)

    @property
    def ready(self) -> list[SwitchSession]:
        return [s for s in self.sessions.values() if s.is_ready]

    async def start(self) -> list[SwitchSession]:
        """Connect every session concurrently; failures are kept in ``failures``."""
        results = await asyncio.gather(
            *(session.run_session() for session in self.sessions.values()),
            return_exceptions=True,
        )
        for dpid, result in zip(self.sessions, results):
            if isinstance(result, BaseException):
                if not isinstance(result, SessionError):
                    raise result
                self.failures[dpid] = result
                logger.debug("s%d failed to connect: %s", dpid, result)
        return self.ready

    def close(self) -> None:
        for session in self.sessions.values():
            session.close()

    async def __aenter__(self) -> "Fleet":
        return self

    async def __aexit__(self, *exc: object) -> None:
        self.close()

    def snapshot(self) -> list[SessionCounters]:
        return [session.snapshot() for session in self.sessions.values()]

    def relay(self, dpid: int, port_no: int, frame: bytes) -> None:
        """Deliver a discovery probe sent out of (dpid, port_no) to the far end."""
        now = clock()
        here = (dpid, port_no)
        self.port_probes.setdefault(here, []).append(now)
        neighbor = self.topology.neighbor_of(dpid, port_no)
        if neighbor is None or here in self.removed or here in self.suppressed:
            return
        self.probe_log.setdefault((here, neighbor), []).append(now)
        session = self.sessions.get(neighbor[0])
        if session is not None:
            session.inject_discovery(frame, neighbor[1])

    def suppress(self, port: PortRef) -> None:
        """Silently stop relaying probes sent out of ``port``."""
        self.suppressed.add(port)

    def remove_link(self, end: PortRef) -> float:
        """Take the link at ``end`` down: stop relaying and report LINK_DOWN on both ends."""
        far = self.topology.neighbor_of(*end)
        if far is None:
            raise ValueError(f"{format_port(end)} is not an inter-switch port")
        removed_at = clock()
        for ref in (end, far):
            self.removed.add(ref)
            session = self.sessions[ref[0]]
            if session.is_ready:
                session.send_port_status(ref[1], link_down=True)
        return removed_at

    def directed_links(self) -> list[tuple[PortRef, PortRef]]:
        return self.topology.links()

    def first_probe(self, link: tuple[PortRef, PortRef], after: float) -> float | None:
        return next((t for t in self.probe_log.get(link, []) if t >= after), None)

    def first_port_probe(self, port: PortRef, after: float) -> float | None:
        return next((t for t in self.port_probes.get(port, []) if t >= after), None)
