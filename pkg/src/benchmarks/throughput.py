"""Throughput: sustained responses per second while every switch floods PacketIns."""

import asyncio
import contextlib

from benchmarks.base import FleetBenchmark, flow_source, in_port_of
from emulator import Fleet, SwitchSession, clock
from errors import SessionError
from models import MessageClass, Mode, SessionCounters, ThroughputPayload

# Yield to the event loop this often when the socket never pushes back.
YIELD_EVERY = 32


def answered(counters: SessionCounters, message_class: MessageClass) -> int:
    if message_class is MessageClass.SYNC:
        return counters.sync_replies_received
    return counters.responses_received


class ThroughputBenchmark(FleetBenchmark):
    """Unthrottled PacketIn (or sync request) flood, paced by TCP backpressure."""

    modes = (Mode.THROUGHPUT,)

    async def measure(
        self, fleet: Fleet, ready: list[SwitchSession]
    ) -> ThroughputPayload:
        message_class = self.plan.message_class
        before = {s.cfg.datapath_id: answered(s.counters, message_class) for s in ready}
        started = clock()
        with contextlib.suppress(TimeoutError):
            async with asyncio.timeout(self.plan.test_duration):
                await asyncio.gather(*(self._flood(session) for session in ready))
        duration = clock() - started
        after = {s.cfg.datapath_id: answered(s.counters, message_class) for s in ready}

        per_switch = {dpid: (after[dpid] - before[dpid]) / duration for dpid in after}
        responses = sum(after.values()) - sum(before.values())
        return ThroughputPayload(
            message_class=message_class,
            duration=duration,
            responses=responses,
            per_switch_rate=per_switch,
            fleet_rate=sum(per_switch.values()),
        )

    async def _flood(self, session: SwitchSession) -> None:
        source = flow_source(session, self.plan.traffic, self.topology)
        seq = 0
        try:
            while session.is_ready:
                if self.plan.message_class is MessageClass.SYNC:
                    await session.send_sync_request()
                else:
                    src, _, frame = source.frame(seq)
                    await session.inject_packet_in(frame, in_port_of(self.topology, src))
                seq += 1
                if seq % YIELD_EVERY == 0:
                    await asyncio.sleep(0)
        except SessionError:
            # A switch that loses its connection stops contributing.
            return
