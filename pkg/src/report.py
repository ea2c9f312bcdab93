"""Turning iteration results into a RunReport."""

import os
import platform
import socket
import sys
import time
from datetime import datetime, timezone

from errors import EmptySamples
from models import (
    METRICS,
    BenchmarkPlan,
    EnvironmentInfo,
    IterationResult,
    IterationSummary,
    RunReport,
)
from stats import aggregate


def environment_info(harness_version: str) -> EnvironmentInfo:
    """Describe the host the harness runs on."""
    return EnvironmentInfo(
        hostname=socket.gethostname(),
        platform=platform.platform(),
        python_version=sys.version.split()[0],
        cpu_count=os.cpu_count() or 1,
        clock_resolution=time.get_clock_info("perf_counter").resolution,
        harness_version=harness_version,
        started_at=datetime.now(timezone.utc),
    )


def summarize(iteration: IterationResult) -> IterationSummary:
    value = iteration.headline
    stats = None
    if value is not None and iteration.payload is not None:
        try:
            stats = aggregate(iteration.payload.sample_values)
        except EmptySamples:
            stats = None
    return IterationSummary(
        index=iteration.index,
        value=value,
        stats=stats,
        failed=iteration.failed or value is None,
    )


def build_report(
    plan: BenchmarkPlan,
    iterations: list[IterationResult],
    environment: EnvironmentInfo,
) -> RunReport:
    """Aggregate a run.

    Warm-up iterations are kept in ``iterations`` but excluded from the
    summaries; ``overall`` aggregates the headline values of the measured
    iterations that produced one.
    """
    metric, unit = METRICS[plan.mode]
    summaries = [summarize(it) for it in iterations if not it.warmup]
    values = [s.value for s in summaries if s.value is not None and not s.failed]
    return RunReport(
        plan=plan,
        label=plan.label,
        metric=metric,
        unit=unit,
        environment=environment,
        iterations=iterations,
        summaries=summaries,
        overall=aggregate(values) if values else None,
    )


def all_failed(report: RunReport) -> bool:
    return all(summary.failed for summary in report.summaries)
