"""
Reference controller with injectable behaviour.

A learning-switch style controller whose service delay, rate cap, drop
schedule, discovery sweeps, path installation and failover role are all
configured through ``OracleBehavior``. Benchmarks run against it to check that
what the harness measures matches what was injected.
"""

import asyncio
import itertools
import logging
import time
from dataclasses import dataclass

from errors import BindFailure, CodecError, NoPath, TopologyError, VersionMismatch
from models import OracleBehavior, OracleRole, PathInstall
from openflow.codec import MessageFramer, OfMessage, decode, decode_port_desc, encode, negotiate
from openflow.constants import (
    HELLO_FAILED_INCOMPATIBLE,
    OFP_NO_BUFFER,
    ErrorType,
    MultipartType,
    Port10,
    Port13,
    ProtocolVersion,
    flood_port,
    is_reserved_port,
)
from openflow.messages import (
    BarrierRequest,
    EchoReply,
    EchoRequest,
    ErrorMsg,
    FeaturesReply,
    FeaturesRequest,
    FlowMod,
    Hello,
    MultipartReply,
    MultipartRequest,
    PacketIn,
    PacketOut,
    PortStatus,
    SetConfig,
    apply_actions,
    build_match,
    hello_bitmap_element,
    output_action,
)
from reference.token_bucket import TokenBucket
from topology import PortRef, Topology
from traffic import eth_addresses, is_discovery_frame, lldp_frame, parse_lldp

logger = logging.getLogger(__name__)


@dataclass
class ControllerStats:
    accepted: int = 0
    rejected: int = 0
    packet_ins: int = 0
    dropped: int = 0
    responses: int = 0
    flow_mods: int = 0
    echoes: int = 0
    probes_sent: int = 0
    reprobes: int = 0


@dataclass
class DiscoveredLink:
    src: PortRef
    dst: PortRef
    first_seen: float
    last_seen: float


class OracleSession:
    """Controller side of one switch connection."""

    def __init__(
        self,
        controller: "ReferenceController",
        reader: asyncio.StreamReader,
        writer: asyncio.StreamWriter,
    ):
        self.controller = controller
        self.behavior = controller.behavior
        self.reader = reader
        self.writer = writer
        self.version = max(self.behavior.versions)
        self.datapath_id: int | None = None
        self.ports: list[int] = []
        self.queue: asyncio.Queue[OfMessage] = asyncio.Queue(self.behavior.queue_size)
        self.gate = asyncio.Event()
        self.packet_in_index = 0
        self._xids = itertools.count(1)
        self._tasks: list[asyncio.Task[None]] = []

    def __str__(self) -> str:
        return f"oracle<s{self.datapath_id}>" if self.datapath_id else "oracle<?>"

    def message(self, body: object) -> bytes:
        return encode(OfMessage(self.version, next(self._xids), body))  # type: ignore[arg-type]

    def write(self, data: bytes) -> None:
        if not self.writer.is_closing():
            self.writer.write(data)

    async def run(self) -> None:
        versions = sorted(self.behavior.versions)
        elements = hello_bitmap_element(versions) if self.version >= ProtocolVersion.V1_3 else b""
        self.write(encode(OfMessage(self.version, next(self._xids), Hello(elements))))
        self._tasks.append(asyncio.create_task(self._worker()))
        framer = MessageFramer()
        try:
            while data := await self.reader.read(65536):
                for raw in framer.feed(data):
                    await self._dispatch(decode(raw))
        except (ConnectionError, CodecError, VersionMismatch) as error:
            logger.debug("%s: closing: %s", self, error)
        finally:
            self.close()

    def close(self) -> None:
        for task in self._tasks:
            task.cancel()
        if self.datapath_id is not None and self.controller.sessions.get(self.datapath_id) is self:
            del self.controller.sessions[self.datapath_id]
        self.writer.close()

    async def _dispatch(self, msg: OfMessage) -> None:
        body = msg.body
        match body:
            case Hello(elements=elements, wire_version=wire_version):
                try:
                    ours = list(self.behavior.versions)
                    peer = wire_version or int(msg.version)
                    self.version = negotiate(ours, peer, elements)
                except VersionMismatch:
                    self.write(
                        self.message(
                            ErrorMsg(ErrorType.HELLO_FAILED, HELLO_FAILED_INCOMPATIBLE)
                        )
                    )
                    raise
                self.write(self.message(FeaturesRequest()))
            case FeaturesReply():
                self._on_features(body)
            case MultipartReply(mp_type=MultipartType.PORT_DESC, body=raw_ports):
                self.ports = [
                    p.port_no
                    for p in decode_port_desc(raw_ports)
                    if not is_reserved_port(self.version, p.port_no)
                ]
                if self.gate.is_set() and self.behavior.discovery_sweep_period is not None:
                    self.probe(self.ports)
            case PacketIn() if is_discovery_frame(body.data):
                self.controller.record_probe(self, body)
            case PacketIn() | EchoRequest():
                # Bounded queue: a full queue stops this reader, which pushes
                # back on the switch through TCP.
                await self.queue.put(msg)
            case PortStatus(port=port):
                if self.gate.is_set():
                    self.controller.stats.reprobes += 1
                    self.probe([port.port_no])
            case _:
                pass

    def _on_features(self, features: FeaturesReply) -> None:
        self.datapath_id = features.datapath_id
        self.ports = [
            p.port_no for p in features.ports if not is_reserved_port(self.version, p.port_no)
        ]
        self.controller.sessions[features.datapath_id] = self
        self._tasks.append(asyncio.create_task(self._after_handshake()))

    async def _after_handshake(self) -> None:
        if self.behavior.role is OracleRole.BACKUP and self.behavior.first_response_delay:
            await asyncio.sleep(self.behavior.first_response_delay)
        self.gate.set()
        setup = self.message(SetConfig(0, 0xFFFF))
        if self.version is ProtocolVersion.V1_3:
            setup += self.message(MultipartRequest(MultipartType.PORT_DESC))
        setup += self.message(BarrierRequest())
        self.write(setup)
        if self.behavior.discovery_sweep_period is not None:
            # 1.3 ports arrive with the PORT_DESC reply, which probes them.
            self.probe(self.ports)

    def probe(self, ports: list[int]) -> None:
        if self.datapath_id is None or not ports:
            return
        in_port = Port10.NONE if self.version is ProtocolVersion.V1_0 else Port13.CONTROLLER
        batch = b"".join(
            self.message(
                PacketOut(
                    OFP_NO_BUFFER,
                    int(in_port),
                    output_action(self.version, port),
                    lldp_frame(self.datapath_id, port),
                )
            )
            for port in ports
        )
        self.controller.stats.probes_sent += len(ports)
        self.write(batch)

    async def _worker(self) -> None:
        """FIFO service loop; one request at a time."""
        try:
            await self._serve_forever()
        except ConnectionError as error:
            logger.debug("%s: worker stopped: %s", self, error)

    async def _serve_forever(self) -> None:
        behavior = self.behavior
        while True:
            msg = await self.queue.get()
            await self.gate.wait()
            if behavior.service_delay:
                await asyncio.sleep(behavior.service_delay)
            body = msg.body
            if isinstance(body, EchoRequest):
                self.write(encode(OfMessage(self.version, msg.xid, EchoReply(body.payload))))
                self.controller.stats.echoes += 1
                continue
            assert isinstance(body, PacketIn)
            await self._serve_packet_in(body)
            await self.writer.drain()

    async def _serve_packet_in(self, packet_in: PacketIn) -> None:
        controller = self.controller
        behavior = self.behavior
        controller.stats.packet_ins += 1
        index = self.packet_in_index
        self.packet_in_index += 1
        n = behavior.drop_every_nth
        if n and index % n == 0:
            controller.stats.dropped += 1
            return
        if controller.bucket is not None:
            await controller.bucket.acquire()

        src, dst = eth_addresses(packet_in.data)
        assert self.datapath_id is not None
        controller.learn(src, (self.datapath_id, packet_in.in_port))

        if behavior.path_install is PathInstall.HOP_BY_HOP:
            if await self._install_path(packet_in, src, dst):
                return
        elif behavior.path_install is PathInstall.EDGE_ONLY:
            self._install_edges(packet_in, src, dst)
            return
        self._reply(packet_in, src, dst, controller.out_port(self, dst))

    def _reply(self, packet_in: PacketIn, src: bytes, dst: bytes, out_port: int) -> None:
        """FlowMod plus PacketOut for the same buffer, in one write."""
        actions = output_action(self.version, out_port)
        flow_mod = self.flow_mod(packet_in.in_port, src, dst, out_port, packet_in.buffer_id)
        data = packet_in.data if packet_in.buffer_id == OFP_NO_BUFFER else b""
        packet_out = PacketOut(packet_in.buffer_id, packet_in.in_port, actions, data)
        self.write(self.message(flow_mod) + self.message(packet_out))
        self.controller.stats.flow_mods += 1
        self.controller.stats.responses += 1

    def flow_mod(
        self, in_port: int, src: bytes, dst: bytes, out_port: int, buffer_id: int = OFP_NO_BUFFER
    ) -> FlowMod:
        actions = output_action(self.version, out_port)
        instructions = actions if self.version is ProtocolVersion.V1_0 else apply_actions(actions)
        return FlowMod(
            match=build_match(self.version, in_port=in_port, eth_src=src, eth_dst=dst),
            idle_timeout=60,
            buffer_id=buffer_id,
            instructions=instructions,
        )

    def _install_edges(self, packet_in: PacketIn, src: bytes, dst: bytes) -> None:
        topology = self.controller.topology
        out_port = self.controller.out_port(self, dst)
        if topology is not None:
            try:
                path = topology.shortest_path(src, dst)
            except (TopologyError, NoPath):
                path = []
            if len(path) > 1:
                last = path[-1]
                egress = self.controller.sessions.get(last.datapath_id)
                if egress is not None:
                    flow_mod = egress.flow_mod(last.in_port, src, dst, last.out_port)
                    egress.write(egress.message(flow_mod))
                    self.controller.stats.flow_mods += 1
                out_port = path[0].out_port
        self._reply(packet_in, src, dst, out_port)

    async def _install_path(self, packet_in: PacketIn, src: bytes, dst: bytes) -> bool:
        """Install hop by hop along the topology; False when no path is known."""
        topology = self.controller.topology
        if topology is None:
            return False
        try:
            path = topology.shortest_path(src, dst)
        except (TopologyError, NoPath):
            return False
        delay = self.behavior.per_hop_delay
        for hop in path[1:][::-1]:
            # Downstream first, so the path is complete once the ingress entry lands.
            if delay:
                await asyncio.sleep(delay)
            session = self.controller.sessions.get(hop.datapath_id)
            if session is not None:
                flow_mod = session.flow_mod(hop.in_port, src, dst, hop.out_port)
                session.write(session.message(flow_mod))
                self.controller.stats.flow_mods += 1
        if delay:
            await asyncio.sleep(delay)
        self._reply(packet_in, src, dst, path[0].out_port)
        return True


class ReferenceController:
    """Embeddable reference controller; ``serve`` starts it listening."""

    def __init__(
        self, behavior: OracleBehavior | None = None, topology: Topology | None = None
    ):
        self.behavior = behavior or OracleBehavior()
        self.topology = topology
        self.sessions: dict[int, OracleSession] = {}
        self.stats = ControllerStats()
        self.links: dict[tuple[PortRef, PortRef], DiscoveredLink] = {}
        self.mac_table: dict[bytes, PortRef] = {}
        self.bucket = (
            TokenBucket(self.behavior.rate_cap) if self.behavior.rate_cap is not None else None
        )
        self.host = "127.0.0.1"
        self.port = 0
        self._server: asyncio.Server | None = None
        self._active: set[OracleSession] = set()
        self._sweeper: asyncio.Task[None] | None = None

    @property
    def endpoint(self) -> str:
        return f"{self.host}:{self.port}"

    async def serve(self, host: str = "127.0.0.1", port: int = 0) -> "ReferenceController":
        try:
            self._server = await asyncio.start_server(self._accept, host, port, backlog=4096)
        except OSError as error:
            raise BindFailure(f"cannot listen on {host}:{port}: {error}") from error
        sockname = self._server.sockets[0].getsockname()
        self.host, self.port = sockname[0], sockname[1]
        if self.behavior.discovery_sweep_period is not None:
            self._sweeper = asyncio.create_task(self._sweep(self.behavior.discovery_sweep_period))
        logger.debug("reference controller listening on %s", self.endpoint)
        return self

    async def close(self) -> None:
        if self._sweeper is not None:
            self._sweeper.cancel()
        for session in list(self._active):
            session.close()
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None

    async def __aenter__(self) -> "ReferenceController":
        if self._server is None:
            await self.serve(self.host, self.port)
        return self

    async def __aexit__(self, *exc: object) -> None:
        await self.close()

    async def _accept(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        cap = self.behavior.session_cap
        if cap is not None and len(self._active) >= cap:
            self.stats.rejected += 1
            writer.close()
            return
        self.stats.accepted += 1
        session = OracleSession(self, reader, writer)
        self._active.add(session)
        try:
            await session.run()
        finally:
            self._active.discard(session)

    async def _sweep(self, period: float) -> None:
        while True:
            await asyncio.sleep(period)
            for session in list(self.sessions.values()):
                if session.gate.is_set():
                    session.probe(session.ports)

    def learn(self, mac: bytes, where: PortRef) -> None:
        self.mac_table[mac] = where

    def out_port(self, session: OracleSession, dst: bytes) -> int:
        where = self.mac_table.get(dst)
        if where is not None and where[0] == session.datapath_id:
            return where[1]
        if self.topology is not None and session.datapath_id is not None:
            try:
                host = self.topology.host(dst)
            except TopologyError:
                return flood_port(session.version)
            if host.attached[0] == session.datapath_id:
                return host.attached[1]
        return flood_port(session.version)

    def record_probe(self, session: OracleSession, packet_in: PacketIn) -> None:
        origin = parse_lldp(packet_in.data)
        if origin is None or session.datapath_id is None:
            return
        key = (origin, (session.datapath_id, packet_in.in_port))
        now = time.perf_counter()
        link = self.links.get(key)
        if link is None:
            self.links[key] = DiscoveredLink(key[0], key[1], now, now)
        else:
            link.last_seen = now


async def serve(
    behavior: OracleBehavior,
    listen_addr: str = "127.0.0.1:0",
    topology: Topology | None = None,
) -> ReferenceController:
    """Start a reference controller on ``listen_addr`` and return its handle."""
    host, _, port = listen_addr.rpartition(":")
    controller = ReferenceController(behavior=behavior, topology=topology)
    return await controller.serve(host.strip("[]") or "127.0.0.1", int(port or 0))
