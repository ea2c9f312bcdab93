"""Order statistics for benchmark samples."""

import math
import statistics
from collections.abc import Iterable

from errors import EmptySamples
from models import Stats


def percentile(ordered: list[float], p: float) -> float:
    """Nearest-rank percentile of an already sorted list."""
    rank = max(1, math.ceil(p / 100 * len(ordered)))
    return ordered[rank - 1]


def aggregate(samples: Iterable[float]) -> Stats:
    """Summarise samples with nearest-rank percentiles and population stddev."""
    ordered = sorted(samples)
    if not ordered:
        raise EmptySamples("cannot aggregate an empty sample set")
    return Stats(
        n=len(ordered),
        min=ordered[0],
        max=ordered[-1],
        mean=statistics.fmean(ordered),
        stddev=statistics.pstdev(ordered),
        p50=percentile(ordered, 50),
        p95=percentile(ordered, 95),
        p99=percentile(ordered, 99),
    )
