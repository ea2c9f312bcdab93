#!/usr/bin/env python3
"""
Base benchmark class.

Defines the iteration loop every benchmark mode shares: warm-up handling,
the inter-test delay, a fresh switch fleet per iteration and CPU sampling.
"""

import asyncio
import logging
from abc import ABC, abstractmethod
from collections.abc import Callable
from datetime import datetime, timezone
from typing import ClassVar

from rich.console import Console

from cpu import CpuSampler
from emulator import Fleet, SessionOptions, SwitchSession
from errors import (
    ConnectRefused,
    ControllerUnreachable,
    HandshakeTimeout,
    MeasurementError,
    SessionError,
    TopologyError,
    UnsupportedPlatform,
)
from models import BenchmarkPlan, IterationResult, Mode, Payload, SessionCounters
from topology import Topology, build
from traffic import FlowSource, TrafficProfile, app_servers

logger = logging.getLogger(__name__)

FleetHook = Callable[[Fleet], None]
ProgressFn = Callable[[IterationResult], None]


def session_options(plan: BenchmarkPlan) -> SessionOptions:
    return SessionOptions(
        versions=plan.of_versions,
        handshake_timeout=plan.handshake_timeout,
        backpressure_timeout=max(plan.response_timeout, plan.handshake_timeout),
        echo_timeout=plan.response_timeout,
        strict_matching=plan.strict_matching,
        bind_address=plan.bind_address,
    )


def flow_source(
    session: SwitchSession, profile: TrafficProfile, topology: Topology | None = None
) -> FlowSource:
    servers = app_servers(topology.hosts) if topology is not None else None
    return FlowSource(profile, session.cfg.mac_pool, servers=servers)


class BaseBenchmark(ABC):
    """Abstract base class for one benchmark mode."""

    modes: ClassVar[tuple[Mode, ...]]

    def __init__(
        self,
        plan: BenchmarkPlan,
        fleet_hook: FleetHook | None = None,
        progress: ProgressFn | None = None,
    ):
        """
        Initialize the benchmark for a plan.

        Args:
            plan: Full test parameterization
            fleet_hook: Called on every fresh fleet before it connects
            progress: Called with every finished iteration
        """
        if plan.mode not in self.modes:
            raise ValueError(f"{type(self).__name__} cannot run a {plan.mode} plan")
        self.plan = plan
        self.check_plan()
        self.fleet_hook = fleet_hook
        self.progress = progress
        self.topology: Topology = build(plan.topology_spec())
        self.options = session_options(plan)
        self.console = Console()

    def check_plan(self) -> None:
        """Reject plans this mode cannot run before any connection is made."""

    @property
    def name(self) -> str:
        return self.plan.mode.value

    @abstractmethod
    async def iteration(self) -> tuple[Payload, list[SessionCounters]]:
        """Run one iteration; returns its payload and the session counters."""
        pass

    def _sampler(self) -> CpuSampler | None:
        try:
            return CpuSampler(self.plan.cpu_sample_period).start()
        except UnsupportedPlatform as error:
            logger.warning("CPU sampling disabled: %s", error)
            return None

    async def execute(self) -> list[IterationResult]:
        """Run every loop of the plan; the first ``warmup_loops`` are flagged."""
        results = []
        for index in range(self.plan.loops):
            if index:
                await asyncio.sleep(self.plan.inter_test_delay)
            results.append(await self._run_one(index))
        return results

    async def _run_one(self, index: int) -> IterationResult:
        warmup = index < self.plan.warmup_loops
        started_at = datetime.now(timezone.utc)
        sampler = self._sampler()
        payload: Payload | None = None
        counters: list[SessionCounters] = []
        error: str | None = None
        try:
            payload, counters = await self.iteration()
        except ControllerUnreachable:
            if sampler is not None:
                await sampler.stop()
            raise
        except (MeasurementError, SessionError) as failure:
            error = f"{type(failure).__name__}: {failure}"
            self.log_error(index, failure)
        cpu = await sampler.stop() if sampler is not None else []
        result = IterationResult(
            index=index,
            warmup=warmup,
            started_at=started_at,
            ended_at=datetime.now(timezone.utc),
            counters=counters,
            payload=payload,
            cpu=cpu,
            failed=error is not None,
            error=error,
        )
        if error is None:
            self.log_success(result)
        if self.progress is not None:
            self.progress(result)
        return result

    def run(self) -> list[IterationResult]:
        """Synchronous wrapper around ``execute``."""
        return asyncio.run(self.execute())

    def log_success(self, result: IterationResult) -> None:
        """Log a finished iteration."""
        tag = " (warm-up)" if result.warmup else ""
        headline = result.headline
        value = "n/a" if headline is None else f"{headline:.6g}"
        logger.info("%s iteration %d%s: %s", self.name, result.index, tag, value)

    def log_error(self, index: int, error: Exception) -> None:
        """Log a failed iteration."""
        self.console.print(
            f"❌ [bold red]{self.name} iteration {index} failed:[/] {error}"
        )

    def __str__(self) -> str:
        return f"{self.name} against {', '.join(self.plan.controller_endpoints)}"


class FleetBenchmark(BaseBenchmark):
    """Benchmark that measures on one fresh, fully connected fleet per iteration."""

    @abstractmethod
    async def measure(self, fleet: Fleet, ready: list[SwitchSession]) -> Payload:
        """
        Measure one iteration on a connected fleet.

        Args:
            fleet: The iteration's fleet, already started
            ready: Sessions that completed the handshake

        Returns:
            The mode's payload for this iteration
        """
        pass

    def new_fleet(self) -> Fleet:
        fleet = Fleet(
            self.topology,
            self.plan.controller_endpoints,
            self.options,
            buffer_size=self.plan.buffer_size,
            flow_table_capacity=self.plan.flow_table_capacity,
        )
        if self.fleet_hook is not None:
            self.fleet_hook(fleet)
        return fleet

    async def connect(self, fleet: Fleet) -> list[SwitchSession]:
        """Start the fleet; raise ControllerUnreachable when no session came up."""
        ready = await fleet.start()
        if not ready:
            unreachable = all(
                isinstance(error, ConnectRefused | HandshakeTimeout)
                for error in fleet.failures.values()
            )
            endpoints = ", ".join(self.plan.controller_endpoints)
            if unreachable:
                raise ControllerUnreachable(f"no switch could connect to {endpoints}")
            raise MeasurementError(f"no switch completed the handshake with {endpoints}")
        if fleet.failures:
            logger.warning(
                "%d of %d switches failed to connect", len(fleet.failures), len(fleet)
            )
        return ready

    async def iteration(self) -> tuple[Payload, list[SessionCounters]]:
        """Run one iteration on a fresh fleet."""
        async with self.new_fleet() as fleet:
            ready = await self.connect(fleet)
            payload = await self.measure(fleet, ready)
            return payload, fleet.snapshot()


def in_port_of(topology: Topology, mac: bytes) -> int:
    """Port a host hangs off; port 1 for addresses outside the topology."""
    try:
        return topology.host(mac).attached[1]
    except TopologyError:
        return 1
