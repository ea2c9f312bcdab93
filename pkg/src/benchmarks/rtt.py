"""Switch-to-controller round trip time from switch-initiated Echo exchanges."""

import asyncio
import statistics

from benchmarks.base import FleetBenchmark
from emulator import Fleet, SwitchSession, clock
from errors import EchoTimeout, ZeroResponses
from models import Mode, RttPayload


class RttBenchmark(FleetBenchmark):
    modes = (Mode.RTT,)

    async def measure(self, fleet: Fleet, ready: list[SwitchSession]) -> RttPayload:
        deadline = clock() + self.plan.test_duration
        per_switch = await asyncio.gather(
            *(self._echo_until(session, deadline) for session in ready)
        )
        samples = [rtt for rtts in per_switch for rtt in rtts]
        if not samples:
            raise ZeroResponses("no EchoReply arrived from the controller")
        return RttPayload(
            samples=samples,
            per_switch_mean={
                session.cfg.datapath_id: statistics.fmean(rtts)
                for session, rtts in zip(ready, per_switch)
                if rtts
            },
        )

    async def _echo_until(self, session: SwitchSession, deadline: float) -> list[float]:
        rtts = []
        while clock() < deadline and session.is_ready:
            try:
                rtts.append(await session.measure_echo_rtt(self.plan.response_timeout))
            except EchoTimeout:
                continue
        return rtts
