"""Flow quality: flows sent, received and missed under a steady arrival rate."""

import asyncio
import contextlib
import math
from collections import OrderedDict
from itertools import cycle

from benchmarks.base import FleetBenchmark, flow_source, in_port_of
from emulator import Fleet, ResponseEvent, SwitchSession, clock
from errors import SessionError
from models import FlowBucket, FlowQualityPayload, Mode
from openflow.constants import OFP_NO_BUFFER, MessageKind
from traffic import Schedule, arrival_stream


class FlowLedger:
    """Outstanding flows of one switch and their fate.

    A response is matched to its flow by buffer id when it carries one, and
    otherwise to the oldest outstanding flow. Flows unanswered after
    ``timeout`` are missed; responses arriving for them later are ignored.
    """

    def __init__(self, timeout: float, bucket_interval: float, origin: float):
        self.timeout = timeout
        self.bucket_interval = bucket_interval
        self.origin = origin
        self.pending: OrderedDict[int, tuple[float, int]] = OrderedDict()
        self.by_buffer: dict[int, int] = {}
        self.buckets: dict[int, FlowBucket] = {}
        self.setup_latencies: list[float] = []
        self.sent = 0
        self.received = 0
        self.missed = 0

    def bucket(self, sent_at: float) -> FlowBucket:
        index = max(0, math.floor((sent_at - self.origin) / self.bucket_interval))
        if index not in self.buckets:
            start = index * self.bucket_interval
            self.buckets[index] = FlowBucket(start=start)
        return self.buckets[index]

    def record_sent(self, seq: int, buffer_id: int, sent_at: float) -> None:
        self.sent += 1
        self.bucket(sent_at).sent += 1
        self.pending[seq] = (sent_at, buffer_id)
        if buffer_id != OFP_NO_BUFFER:
            self.by_buffer[buffer_id] = seq

    def on_response(self, event: ResponseEvent) -> None:
        if event.kind is MessageKind.ECHO_REPLY:
            return
        self.expire(event.at)
        buffered = event.buffer_id
        if buffered is not None and buffered != OFP_NO_BUFFER:
            found = self.by_buffer.get(buffered)
            if found is None:
                return  # late answer to an expired flow
            seq = found
        elif self.pending:
            seq = next(iter(self.pending))
        else:
            return
        sent_at, buffer_id = self.pending.pop(seq)
        if self.by_buffer.get(buffer_id) == seq:
            del self.by_buffer[buffer_id]
        self.received += 1
        self.bucket(sent_at).received += 1
        self.setup_latencies.append(event.at - sent_at)

    def expire(self, now: float) -> None:
        while self.pending:
            seq, (sent_at, buffer_id) = next(iter(self.pending.items()))
            if now - sent_at <= self.timeout:
                return
            self.pending.popitem(last=False)
            if self.by_buffer.get(buffer_id) == seq:
                del self.by_buffer[buffer_id]
            self.missed += 1
            self.bucket(sent_at).missed += 1


class FlowQualityBenchmark(FleetBenchmark):
    """Injects flows fleet-wide at ``rate`` per second, round-robin over switches."""

    modes = (Mode.FLOW_QUALITY,)

    async def measure(
        self, fleet: Fleet, ready: list[SwitchSession]
    ) -> FlowQualityPayload:
        origin = clock()
        ledgers = {
            session.cfg.datapath_id: FlowLedger(
                self.plan.response_timeout, self.plan.bucket_interval, origin
            )
            for session in ready
        }
        for session in ready:
            session.add_listener(ledgers[session.cfg.datapath_id].on_response)
        try:
            await self._inject(ready, ledgers, origin)
            await asyncio.sleep(self.plan.response_timeout)
        finally:
            for session in ready:
                session.remove_listener(ledgers[session.cfg.datapath_id].on_response)
        for ledger in ledgers.values():
            ledger.expire(math.inf)
        return self._payload(list(ledgers.values()))

    async def _inject(
        self, ready: list[SwitchSession], ledgers: dict[int, FlowLedger], origin: float
    ) -> None:
        sources = {
            s.cfg.datapath_id: flow_source(s, self.plan.traffic, self.topology) for s in ready
        }
        targets = cycle(ready)
        spec = self.plan.arrival_spec()
        # Only timed schedules end on their own; the rest run until the deadline.
        timed = spec.schedule in (Schedule.UNIFORM, Schedule.POISSON)
        arrivals = arrival_stream(spec, seed=self.plan.seed)
        for offset, seq in arrivals:
            if offset >= self.plan.test_duration:
                break
            delay = origin + offset - clock()
            if delay > 0:
                await asyncio.sleep(delay)
            elif seq % 32 == 0:
                await asyncio.sleep(0)
            if not timed and clock() - origin >= self.plan.test_duration:
                break
            session = next(targets)
            dpid = session.cfg.datapath_id
            if not session.is_ready:
                continue
            src, _, frame = sources[dpid].frame(seq)
            buffer_id = session.next_buffer_id()
            # Recorded first: the response may be read while the send drains.
            ledgers[dpid].record_sent(seq, buffer_id, clock())
            with contextlib.suppress(SessionError):
                await session.inject_packet_in(
                    frame, in_port_of(self.topology, src), buffer_id
                )

    def _payload(self, ledgers: list[FlowLedger]) -> FlowQualityPayload:
        merged: dict[float, FlowBucket] = {}
        for ledger in ledgers:
            for bucket in ledger.buckets.values():
                into = merged.setdefault(bucket.start, FlowBucket(start=bucket.start))
                into.sent += bucket.sent
                into.received += bucket.received
                into.missed += bucket.missed
        return FlowQualityPayload(
            sent=sum(ledger.sent for ledger in ledgers),
            received=sum(ledger.received for ledger in ledgers),
            missed=sum(ledger.missed for ledger in ledgers),
            buckets=[merged[start] for start in sorted(merged)],
            setup_latencies=[s for ledger in ledgers for s in ledger.setup_latencies],
        )
