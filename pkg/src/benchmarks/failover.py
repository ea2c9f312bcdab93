"""Failover: switchover time from a dropped primary to the backup controller."""

import asyncio
import logging

from benchmarks.base import FleetBenchmark
from emulator import Fleet, SwitchSession
from errors import MeasurementError, NoBackupEndpoint, SessionError
from models import FailoverPayload, Mode

logger = logging.getLogger(__name__)


class FailoverBenchmark(FleetBenchmark):
    """Drops every primary connection at once and times each switch's recovery."""

    modes = (Mode.FAILOVER,)

    def check_plan(self) -> None:
        if len(self.plan.controller_endpoints) < 2:
            raise NoBackupEndpoint(
                "failover needs a primary and at least one backup endpoint"
            )

    async def measure(
        self, fleet: Fleet, ready: list[SwitchSession]
    ) -> FailoverPayload:
        # Steady state: the primary has finished configuring every switch.
        await asyncio.gather(
            *(session.wait_settled(self.plan.handshake_timeout) for session in ready)
        )
        results = await asyncio.gather(
            *(session.fail_over() for session in ready), return_exceptions=True
        )

        switchover: dict[int, float] = {}
        for session, result in zip(ready, results):
            if isinstance(result, SessionError):
                logger.warning("%s did not fail over: %s", session, result)
            elif isinstance(result, BaseException):
                raise result
            else:
                switchover[session.cfg.datapath_id] = result
        if not switchover:
            raise MeasurementError("no switch reached the backup controller")
        return FailoverPayload(switchover=switchover, fleet_max=max(switchover.values()))
