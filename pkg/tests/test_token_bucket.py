#!/usr/bin/env python3
"""Tests for the reference controller's token bucket."""

import time

import pytest

from reference.token_bucket import TokenBucket


class VirtualClock:
    def __init__(self) -> None:
        self.now = 0.0

    def __call__(self) -> float:
        return self.now


@pytest.mark.parametrize("rate,seconds", [(100.0, 1.0), (250.0, 2.0), (7.0, 3.0)])
def test_grants_floor_of_rate_times_elapsed(rate: float, seconds: float) -> None:
    clock = VirtualClock()
    bucket = TokenBucket(rate, capacity=10, clock=clock)
    granted = 0
    steps = int(seconds * 1000)
    for step in range(1, steps + 1):
        clock.now = step / 1000
        while bucket.try_acquire():
            granted += 1
    assert granted == int(rate * seconds)


def test_bucket_starts_empty() -> None:
    bucket = TokenBucket(50.0, clock=VirtualClock())
    assert bucket.tokens == 0
    assert not bucket.try_acquire()


def test_capacity_caps_saved_tokens() -> None:
    clock = VirtualClock()
    bucket = TokenBucket(100.0, capacity=5, clock=clock)
    clock.now = 10.0
    assert bucket.tokens == 5
    for _ in range(5):
        assert bucket.try_acquire()
    assert not bucket.try_acquire()
    clock.now = 10.01
    assert bucket.try_acquire()


def test_default_capacity_is_one_hundredth_of_rate() -> None:
    assert TokenBucket(1000.0, clock=VirtualClock()).capacity == 10
    assert TokenBucket(5.0, clock=VirtualClock()).capacity == 1


def test_time_until_available() -> None:
    clock = VirtualClock()
    bucket = TokenBucket(10.0, clock=clock)
    assert bucket.time_until_available() == pytest.approx(0.1)
    clock.now = 0.05
    assert bucket.time_until_available() == pytest.approx(0.05)
    clock.now = 0.1
    assert bucket.time_until_available() == 0.0


@pytest.mark.parametrize("rate", [0.0, -1.0])
def test_rate_must_be_positive(rate: float) -> None:
    with pytest.raises(ValueError):
        TokenBucket(rate)


async def test_acquire_paces_callers() -> None:
    bucket = TokenBucket(1000.0, capacity=1)
    started = time.monotonic()
    for _ in range(10):
        await bucket.acquire()
    assert time.monotonic() - started >= 0.009
