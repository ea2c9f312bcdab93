"""Session capacity: how many concurrent switch sessions a controller sustains."""

import asyncio
import logging

from benchmarks.base import BaseBenchmark
from emulator import SwitchConfig, SwitchSession
from errors import SessionError
from models import CapacityPayload, CapacityStep, Mode, SessionCounters
from topology import host_mac

logger = logging.getLogger(__name__)


class CapacityBenchmark(BaseBenchmark):
    """Adds sessions in steps until too many of a step fail or the hard cap is hit.

    The reported capacity is the live session count before the first failing
    step. An unreachable controller gives a capacity of zero, not an error.
    """

    modes = (Mode.SESSION_CAPACITY,)

    def _session(self, dpid: int) -> SwitchSession:
        cfg = SwitchConfig(
            datapath_id=dpid,
            n_ports=1,
            mac_pool=(host_mac(dpid, 1),),
            buffer_size=self.plan.buffer_size,
            flow_table_capacity=self.plan.flow_table_capacity,
        )
        return SwitchSession(cfg, self.plan.controller_endpoints, self.options)

    async def iteration(self) -> tuple[CapacityPayload, list[SessionCounters]]:
        sessions: list[SwitchSession] = []
        try:
            payload = await self._ramp(sessions)
            return payload, [session.snapshot() for session in sessions]
        finally:
            for session in sessions:
                session.close()

    async def _ramp(self, sessions: list[SwitchSession]) -> CapacityPayload:
        plan = self.plan
        steps: list[CapacityStep] = []
        capacity = 0
        while len(sessions) < plan.capacity_hard_cap:
            size = min(plan.capacity_step, plan.capacity_hard_cap - len(sessions))
            batch = [self._session(len(sessions) + i + 1) for i in range(size)]
            sessions.extend(batch)
            results = await asyncio.gather(
                *(session.run_session() for session in batch), return_exceptions=True
            )
            for result in results:
                if isinstance(result, BaseException) and not isinstance(
                    result, SessionError
                ):
                    raise result

            live = sum(session.is_ready for session in sessions)
            # Earlier sessions the controller dropped count against this step.
            failures = capacity + size - live
            steps.append(CapacityStep(sessions=live, failures=failures))
            logger.debug("capacity step: %d live, %d failed", live, failures)
            if failures / size > plan.capacity_failure_threshold:
                return CapacityPayload(capacity=capacity, steps=steps)
            capacity = live
        return CapacityPayload(capacity=capacity, reached_hard_cap=True, steps=steps)
