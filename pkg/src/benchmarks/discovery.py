"""Topology discovery and topology change detection times."""

import asyncio
import logging

from benchmarks.base import FleetBenchmark
from emulator import Fleet, SwitchSession, clock
from errors import DiscoveryTimeout, MeasurementError
from models import DiscoveryPayload, Mode
from topology import PortRef, format_port

logger = logging.getLogger(__name__)

POLL_INTERVAL = 0.005

DirectedLink = tuple[PortRef, PortRef]


def link_label(link: DirectedLink) -> str:
    return f"{format_port(link[0])}->{format_port(link[1])}"


class DiscoveryBenchmark(FleetBenchmark):
    """Time until every directed link has carried a controller probe.

    In ``topology_change`` mode one link is then taken down and the time until
    the controller re-probes both of its ends is the headline.
    """

    modes = (Mode.TOPOLOGY_DISCOVERY, Mode.TOPOLOGY_CHANGE)

    @property
    def measures_change(self) -> bool:
        return self.plan.mode is Mode.TOPOLOGY_CHANGE or self.plan.link_removal

    async def measure(
        self, fleet: Fleet, ready: list[SwitchSession]
    ) -> DiscoveryPayload:
        if len(ready) < len(fleet):
            raise MeasurementError(
                f"discovery needs every switch connected; {len(fleet.failures)} failed"
            )
        origin = min(s.ready_at for s in ready if s.ready_at is not None)
        links = fleet.directed_links()
        discovery_time, probed = await self._await_probes(fleet, links, origin)
        logger.debug("all %d directed links probed after %.6fs", len(links), discovery_time)

        change_time = None
        if self.measures_change and links:
            change_time = await self._change(fleet, links[0])

        return DiscoveryPayload(
            mode=self.plan.mode.value,
            discovery_time=discovery_time,
            switches=len(fleet),
            links=len(links),
            change_time=change_time,
            probed=probed,
        )

    async def _await_probes(
        self, fleet: Fleet, links: list[DirectedLink], origin: float
    ) -> tuple[float, dict[str, bool]]:
        deadline = clock() + self.plan.test_duration
        while True:
            seen = {link: fleet.first_probe(link, origin) for link in links}
            if all(t is not None for t in seen.values()):
                latest = max((t for t in seen.values() if t is not None), default=origin)
                return latest - origin, {link_label(k): True for k in seen}
            if clock() >= deadline:
                probed = {link_label(k): t is not None for k, t in seen.items()}
                raise DiscoveryTimeout(
                    f"{sum(not p for p in probed.values())} of {len(links)} directed "
                    f"links never probed within {self.plan.test_duration}s",
                    probed,
                )
            await asyncio.sleep(POLL_INTERVAL)

    async def _change(self, fleet: Fleet, link: DirectedLink) -> float | None:
        end, far = link
        removed_at = fleet.remove_link(end)
        deadline = removed_at + self.plan.test_duration
        while clock() < deadline:
            seen = [fleet.first_port_probe(ref, removed_at) for ref in (end, far)]
            if all(t is not None for t in seen):
                return max(t for t in seen if t is not None) - removed_at
            await asyncio.sleep(POLL_INTERVAL)
        if self.plan.mode is Mode.TOPOLOGY_CHANGE:
            raise DiscoveryTimeout(
                f"link {link_label(link)} removal never re-probed",
                {link_label(link): False},
            )
        logger.warning("link %s removal never re-probed", link_label(link))
        return None
