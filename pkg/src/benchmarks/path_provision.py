"""Reactive path provisioning time over host pairs."""

import asyncio
import logging
from functools import partial

from benchmarks.base import FleetBenchmark
from emulator import Fleet, ResponseEvent, SwitchSession, clock
from errors import ProvisionTimeout, SessionError
from models import Mode, PathProvisionPayload
from openflow.constants import FlowModCommand
from topology import Topology, format_mac
from traffic import ProfileKind, TrafficProfile, next_frame

logger = logging.getLogger(__name__)

DEFAULT_PAIRS = 10
INSTALLING = (FlowModCommand.ADD, FlowModCommand.MODIFY, FlowModCommand.MODIFY_STRICT)


class PathTracker:
    """Collects switches that installed a FlowMod covering one (src, dst) flow.

    ``done`` resolves with the arrival time of the FlowMod that first closes a
    connected chain of such switches from the source's switch to the
    destination's.
    """

    def __init__(self, topology: Topology, src: bytes, dst: bytes):
        self.topology = topology
        self.src_dpid = topology.host(src).attached[0]
        self.dst_dpid = topology.host(dst).attached[0]
        self.src = src
        self.dst = dst
        self.installed: set[int] = set()
        self.done: asyncio.Future[float] = asyncio.get_running_loop().create_future()

    def record(self, dpid: int, event: ResponseEvent) -> None:
        flow_mod = event.flow_mod
        if flow_mod is None or self.done.done():
            return
        if flow_mod.command not in INSTALLING:
            return
        if not flow_mod.match.covers(self.src, self.dst):
            return
        self.installed.add(dpid)
        if self.topology.connected_within(self.src_dpid, self.dst_dpid, self.installed):
            self.done.set_result(event.at)


class PathProvisionBenchmark(FleetBenchmark):
    """Time from the ingress PacketIn until a FlowMod chain joins src to dst."""

    modes = (Mode.PATH_PROVISION,)

    def profile(self) -> TrafficProfile:
        # Broadcast ARP requests name no destination to provision towards.
        if self.plan.traffic.kind is ProfileKind.ARP_REQUEST:
            return TrafficProfile(kind=ProfileKind.ARP_REPLY)
        return self.plan.traffic

    async def measure(
        self, fleet: Fleet, ready: list[SwitchSession]
    ) -> PathProvisionPayload:
        pairs = self.topology.host_pairs(
            limit=self.plan.pairs or DEFAULT_PAIRS, seed=self.plan.seed
        )
        if not pairs:
            raise ProvisionTimeout("the topology holds fewer than two hosts")

        profile = self.profile()
        times: list[float] = []
        timeouts = 0
        started = clock()
        for seq, (src, dst) in enumerate(pairs):
            try:
                times.append(await self._provision(fleet, src, dst, profile, seq))
            except ProvisionTimeout as error:
                timeouts += 1
                logger.info("%s", error)
        elapsed = clock() - started

        if not times:
            raise ProvisionTimeout(
                f"none of {len(pairs)} paths was provisioned within "
                f"{self.plan.response_timeout}s"
            )
        return PathProvisionPayload(
            provision_times=times,
            pairs_tried=len(pairs),
            timeouts=timeouts,
            provision_rate=len(times) / elapsed if elapsed > 0 else 0.0,
        )

    async def _provision(
        self, fleet: Fleet, src: bytes, dst: bytes, profile: TrafficProfile, seq: int
    ) -> float:
        tracker = PathTracker(self.topology, src, dst)
        ingress_dpid, in_port = self.topology.host(src).attached
        ingress = fleet.sessions[ingress_dpid]
        listeners = [
            (session, partial(tracker.record, dpid))
            for dpid, session in fleet.sessions.items()
        ]
        for session, listener in listeners:
            session.add_listener(listener)
        try:
            frame = next_frame(profile, src, dst, seq)
            sent_at = await ingress.inject_packet_in(frame, in_port)
            done_at = await asyncio.wait_for(tracker.done, self.plan.response_timeout)
        except (TimeoutError, SessionError):
            raise ProvisionTimeout(
                f"path {format_mac(src)} -> {format_mac(dst)} incomplete; "
                f"FlowMods seen on {sorted(tracker.installed)}"
            ) from None
        finally:
            for session, listener in listeners:
                session.remove_listener(listener)
        return done_at - sent_at

