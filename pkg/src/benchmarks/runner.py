"""
Entry points for running a plan.

Every mode has a ``run_<mode>`` coroutine; ``run_benchmark`` dispatches on the
plan's mode.
"""

from benchmarks.base import BaseBenchmark, FleetHook, ProgressFn
from benchmarks.capacity import CapacityBenchmark
from benchmarks.discovery import DiscoveryBenchmark
from benchmarks.failover import FailoverBenchmark
from benchmarks.flow_quality import FlowQualityBenchmark
from benchmarks.latency import LatencyBenchmark
from benchmarks.path_provision import PathProvisionBenchmark
from benchmarks.rtt import RttBenchmark
from benchmarks.throughput import ThroughputBenchmark
from models import BenchmarkPlan, IterationResult, Mode

BENCHMARKS: dict[Mode, type[BaseBenchmark]] = {
    Mode.LATENCY: LatencyBenchmark,
    Mode.THROUGHPUT: ThroughputBenchmark,
    Mode.PATH_PROVISION: PathProvisionBenchmark,
    Mode.TOPOLOGY_DISCOVERY: DiscoveryBenchmark,
    Mode.TOPOLOGY_CHANGE: DiscoveryBenchmark,
    Mode.FAILOVER: FailoverBenchmark,
    Mode.SESSION_CAPACITY: CapacityBenchmark,
    Mode.FLOW_QUALITY: FlowQualityBenchmark,
    Mode.RTT: RttBenchmark,
}


def create_benchmark(
    plan: BenchmarkPlan,
    fleet_hook: FleetHook | None = None,
    progress: ProgressFn | None = None,
) -> BaseBenchmark:
    return BENCHMARKS[plan.mode](plan, fleet_hook=fleet_hook, progress=progress)


async def run_benchmark(
    plan: BenchmarkPlan,
    fleet_hook: FleetHook | None = None,
    progress: ProgressFn | None = None,
) -> list[IterationResult]:
    """Run every loop of ``plan``; warm-up iterations are included and flagged."""
    return await create_benchmark(plan, fleet_hook, progress).execute()


async def run_latency(plan: BenchmarkPlan) -> list[IterationResult]:
    return await LatencyBenchmark(plan).execute()


async def run_throughput(plan: BenchmarkPlan) -> list[IterationResult]:
    return await ThroughputBenchmark(plan).execute()


async def run_path_provision(plan: BenchmarkPlan) -> list[IterationResult]:
    return await PathProvisionBenchmark(plan).execute()


async def run_topology_discovery(plan: BenchmarkPlan) -> list[IterationResult]:
    return await DiscoveryBenchmark(plan).execute()


async def run_topology_change(plan: BenchmarkPlan) -> list[IterationResult]:
    return await DiscoveryBenchmark(plan).execute()


async def run_failover(plan: BenchmarkPlan) -> list[IterationResult]:
    return await FailoverBenchmark(plan).execute()


async def run_session_capacity(plan: BenchmarkPlan) -> list[IterationResult]:
    return await CapacityBenchmark(plan).execute()


async def run_flow_quality(plan: BenchmarkPlan) -> list[IterationResult]:
    return await FlowQualityBenchmark(plan).execute()


async def run_rtt(plan: BenchmarkPlan) -> list[IterationResult]:
    return await RttBenchmark(plan).execute()
