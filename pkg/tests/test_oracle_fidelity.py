#!/usr/bin/env python3
"""Each mode recovers the reference controller's configured behaviour.

Runs compare a configured delay, rate cap or drop schedule against a baseline
run of the same shape and take seconds each.
"""

import asyncio
import resource
import statistics
from typing import Any

import pytest

from benchmarks.runner import run_benchmark
from emulator import Fleet, SessionOptions
from models import (
    BenchmarkPlan,
    FailoverPayload,
    FlowQualityPayload,
    LatencyPayload,
    Mode,
    OracleBehavior,
    OracleRole,
    PathInstall,
    PathProvisionPayload,
    Payload,
    ThroughputPayload,
    TopologyPlan,
)
from reference.controller import ReferenceController
from topology import Topology, build, linear

pytestmark = pytest.mark.slow

SESSIONS = 1000


def plan_for(mode: Mode, endpoints: list[str], **overrides: Any) -> BenchmarkPlan:
    fields: dict[str, Any] = {
        "mode": mode,
        "controller_endpoints": endpoints,
        "n_switches": 2,
        "loops": 1,
        "warmup_loops": 0,
        "test_duration": 1.0,
        "inter_test_delay": 0.0,
        "response_timeout": 0.5,
        "handshake_timeout": 5.0,
        "cpu_sample_period": 0.1,
        "topology": TopologyPlan(hosts_per_switch=2),
    }
    fields.update(overrides)
    return BenchmarkPlan.model_validate(fields)


async def measure_once(
    behavior: OracleBehavior,
    mode: Mode,
    topology: Topology | None = None,
    **overrides: Any,
) -> Payload:
    async with ReferenceController(behavior, topology) as controller:
        [result] = await run_benchmark(plan_for(mode, [controller.endpoint], **overrides))
    assert not result.failed, result.error
    assert result.payload is not None
    return result.payload


# Sixteen switches at small delays measure interpreter time, not the delay.
@pytest.mark.parametrize(
    "n_switches,delay",
    [(2, 0.001), (2, 0.005), (2, 0.020), (2, 0.100), (16, 0.100)],
)
async def test_latency_recovers_the_service_delay(n_switches: int, delay: float) -> None:
    baseline = await measure_once(OracleBehavior(), Mode.LATENCY, n_switches=n_switches)
    delayed = await measure_once(
        OracleBehavior(service_delay=delay), Mode.LATENCY, n_switches=n_switches
    )

    assert isinstance(baseline, LatencyPayload)
    assert isinstance(delayed, LatencyPayload)
    assert delayed.unanswered == 0
    expected = statistics.fmean(baseline.samples) + delay
    assert abs(statistics.fmean(delayed.samples) - expected) <= max(0.001, 0.1 * delay)


async def test_throughput_recovers_the_rate_cap() -> None:
    payload = await measure_once(
        OracleBehavior(rate_cap=1000.0), Mode.THROUGHPUT, n_switches=4, test_duration=3.0
    )

    assert isinstance(payload, ThroughputPayload)
    assert payload.fleet_rate == pytest.approx(1000.0, rel=0.05)
    assert payload.fleet_rate == pytest.approx(sum(payload.per_switch_rate.values()))


async def test_miss_rate_follows_the_drop_schedule() -> None:
    payload = await measure_once(
        OracleBehavior(drop_every_nth=10),
        Mode.FLOW_QUALITY,
        rate=100.0,
        test_duration=5.0,
        response_timeout=0.3,
        bucket_interval=1.0,
    )

    assert isinstance(payload, FlowQualityPayload)
    assert payload.sent >= 400
    assert payload.sent == payload.received + payload.missed
    assert payload.miss_rate == pytest.approx(0.10, abs=0.01)


async def test_hop_by_hop_install_adds_the_per_hop_delay() -> None:
    topology_plan = TopologyPlan(hosts_per_switch=1)
    topology = build(topology_plan.to_spec(4))
    fields: dict[str, Any] = {"n_switches": 4, "topology": topology_plan, "pairs": 12}
    payloads = [
        await measure_once(
            OracleBehavior(path_install=PathInstall.HOP_BY_HOP, per_hop_delay=per_hop),
            Mode.PATH_PROVISION,
            topology,
            **fields,
        )
        for per_hop in (0.0, 0.002)
    ]
    base, delayed = payloads
    assert isinstance(base, PathProvisionPayload)
    assert isinstance(delayed, PathProvisionPayload)
    assert base.timeouts == delayed.timeouts == 0

    # One sleep per switch on the path, ingress included.
    hops = [len(topology.shortest_path(src, dst)) for src, dst in topology.host_pairs(12)]
    assert max(hops) == 4
    baseline = statistics.fmean(base.provision_times)
    for n_hops, elapsed in zip(hops, delayed.provision_times, strict=True):
        assert abs(elapsed - (baseline + 0.002 * n_hops)) <= 0.002


async def failover_payload(first_response_delay: float) -> FailoverPayload:
    backup_behavior = OracleBehavior(
        role=OracleRole.BACKUP, first_response_delay=first_response_delay
    )
    async with (
        ReferenceController() as primary,
        ReferenceController(backup_behavior) as backup,
    ):
        plan = plan_for(Mode.FAILOVER, [primary.endpoint, backup.endpoint], n_switches=16)
        [result] = await run_benchmark(plan)
    assert not result.failed, result.error
    assert isinstance(result.payload, FailoverPayload)
    return result.payload


async def test_failover_adds_the_backup_delay() -> None:
    base = await failover_payload(0.0)
    delayed = await failover_payload(0.05)

    assert len(delayed.switchover) == 16
    expected = statistics.fmean(base.switchover.values()) + 0.05
    assert abs(statistics.fmean(delayed.switchover.values()) - expected) <= 0.01
    assert min(delayed.switchover.values()) >= 0.045


async def test_a_thousand_sessions_reach_ready() -> None:
    soft, hard = resource.getrlimit(resource.RLIMIT_NOFILE)
    needed = 2 * SESSIONS + 256
    if hard != resource.RLIM_INFINITY and hard < needed:
        pytest.skip(f"open file limit {hard} is below {needed}")
    resource.setrlimit(resource.RLIMIT_NOFILE, (max(soft, needed), hard))
    try:
        topology = build(linear(SESSIONS, hosts_per_switch=0))
        options = SessionOptions(handshake_timeout=25.0)
        async with ReferenceController() as controller:
            async with asyncio.timeout(30):
                async with Fleet(topology, [controller.endpoint], options) as fleet:
                    ready = await fleet.start()
                    assert len(ready) == SESSIONS
                    assert not fleet.failures
    finally:
        resource.setrlimit(resource.RLIMIT_NOFILE, (soft, hard))
