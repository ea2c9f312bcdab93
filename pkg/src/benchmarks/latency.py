"""Flow setup latency: PacketIn to response, per switch, over the test duration."""

import asyncio
import statistics
from collections import deque

from benchmarks.base import FleetBenchmark, flow_source, in_port_of
from emulator import Fleet, ResponseEvent, SwitchSession, clock
from errors import EchoTimeout, ZeroResponses
from models import LatencyPayload, LatencyVariant, MessageClass, Mode


class SwitchSamples:
    def __init__(self) -> None:
        self.samples: list[float] = []
        self.unanswered = 0


class LatencyBenchmark(FleetBenchmark):
    """Serial (one outstanding request) or pipelined latency per switch."""

    modes = (Mode.LATENCY,)

    async def measure(
        self, fleet: Fleet, ready: list[SwitchSession]
    ) -> LatencyPayload:
        deadline = clock() + self.plan.test_duration
        records = {session.cfg.datapath_id: SwitchSamples() for session in ready}
        await asyncio.gather(
            *(
                self._drive(session, records[session.cfg.datapath_id], deadline)
                for session in ready
            )
        )

        samples = [s for record in records.values() for s in record.samples]
        if not samples:
            raise ZeroResponses(
                f"no switch saw a response within {self.plan.response_timeout}s"
            )
        return LatencyPayload(
            variant=self.plan.variant,
            message_class=self.plan.message_class,
            samples=samples,
            per_switch_mean={
                dpid: statistics.fmean(record.samples)
                for dpid, record in records.items()
                if record.samples
            },
            unanswered=sum(record.unanswered for record in records.values()),
        )

    async def _drive(
        self, session: SwitchSession, record: SwitchSamples, deadline: float
    ) -> None:
        if self.plan.message_class is MessageClass.SYNC:
            await self._sync_serial(session, record, deadline)
        elif self.plan.variant is LatencyVariant.PIPELINED:
            await self._pipelined(session, record, deadline)
        else:
            await self._serial(session, record, deadline)

    async def _serial(
        self, session: SwitchSession, record: SwitchSamples, deadline: float
    ) -> None:
        source = flow_source(session, self.plan.traffic, self.topology)
        seq = 0
        while clock() < deadline and session.is_ready:
            src, _, frame = source.frame(seq)
            seq += 1
            buffer_id = session.next_buffer_id()
            future = session.expect_response(buffer_id)
            sent_at = await session.inject_packet_in(
                frame, in_port_of(self.topology, src), buffer_id
            )
            try:
                event = await session.await_response(
                    future, self.plan.response_timeout
                )
            except TimeoutError:
                record.unanswered += 1
            else:
                record.samples.append(event.at - sent_at)

    async def _sync_serial(
        self, session: SwitchSession, record: SwitchSamples, deadline: float
    ) -> None:
        while clock() < deadline and session.is_ready:
            try:
                rtt = await session.sync_round_trip(self.plan.response_timeout)
            except EchoTimeout:
                record.unanswered += 1
            else:
                record.samples.append(rtt)

    async def _pipelined(
        self, session: SwitchSession, record: SwitchSamples, deadline: float
    ) -> None:
        """Keep ``pipeline_depth`` requests outstanding; responses retire the oldest."""
        source = flow_source(session, self.plan.traffic, self.topology)
        outstanding: deque[float] = deque()
        slots = asyncio.Semaphore(self.plan.pipeline_depth)

        def retire(event: ResponseEvent) -> None:
            if outstanding:
                record.samples.append(event.at - outstanding.popleft())
                slots.release()

        session.add_listener(retire)
        try:
            seq = 0
            while clock() < deadline and session.is_ready:
                try:
                    await asyncio.wait_for(slots.acquire(), self.plan.response_timeout)
                except TimeoutError:
                    # Give up on the oldest request and reuse its slot.
                    if outstanding:
                        outstanding.popleft()
                        record.unanswered += 1
                src, _, frame = source.frame(seq)
                seq += 1
                outstanding.append(clock())
                await session.inject_packet_in(frame, in_port_of(self.topology, src))
            tail_deadline = clock() + self.plan.response_timeout
            while outstanding and clock() < tail_deadline and session.is_ready:
                await asyncio.sleep(0.001)
            record.unanswered += len(outstanding)
        finally:
            session.remove_listener(retire)
