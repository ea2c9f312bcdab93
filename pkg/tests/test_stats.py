#!/usr/bin/env python3
"""Tests for sample aggregation."""

import random

import pytest

from errors import EmptySamples
from stats import aggregate, percentile


def test_aggregate_known_values() -> None:
    stats = aggregate([4.0, 1.0, 3.0, 2.0])
    assert stats.n == 4
    assert (stats.min, stats.max) == (1.0, 4.0)
    assert stats.mean == pytest.approx(2.5)
    assert stats.stddev == pytest.approx(1.118034, rel=1e-6)
    assert (stats.p50, stats.p95, stats.p99) == (2.0, 4.0, 4.0)


def test_single_sample() -> None:
    stats = aggregate([0.25])
    assert stats.stddev == 0.0
    assert stats.p50 == stats.p99 == stats.min == stats.max == 0.25


@pytest.mark.parametrize(
    "p,expected",
    [(1, 1), (10, 10), (50, 50), (95, 95), (99, 99), (100, 100)],
)
def test_nearest_rank_percentile(p: float, expected: int) -> None:
    ordered = [float(n) for n in range(1, 101)]
    assert percentile(ordered, p) == expected


@pytest.mark.parametrize("seed", range(5))
def test_aggregate_ignores_sample_order(seed: int) -> None:
    rng = random.Random(seed)
    samples = [rng.expovariate(100.0) for _ in range(500)]
    shuffled = samples[:]
    rng.shuffle(shuffled)
    assert aggregate(samples) == aggregate(shuffled)


@pytest.mark.parametrize("seed", range(5))
def test_percentiles_are_ordered(seed: int) -> None:
    rng = random.Random(seed)
    stats = aggregate(rng.gauss(1.0, 0.2) for _ in range(rng.randrange(1, 300)))
    assert stats.min <= stats.p50 <= stats.p95 <= stats.p99 <= stats.max
    assert stats.min <= stats.mean <= stats.max


def test_empty_samples() -> None:
    with pytest.raises(EmptySamples):
        aggregate([])
