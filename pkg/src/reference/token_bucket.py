"""Token bucket shared by every session of the reference controller."""

import asyncio
import math
import time
from collections.abc import Callable

Clock = Callable[[], float]


class TokenBucket:
    """Grants one token per ``1/rate`` seconds, holding at most ``capacity``.

    The bucket starts empty. Earned tokens are derived from the elapsed time
    since creation rather than accumulated step by step, so with a virtual
    clock advanced by D seconds (and drained often enough not to hit the
    capacity) exactly ``floor(rate * D)`` tokens are granted.
    """

    def __init__(self, rate: float, capacity: float | None = None, clock: Clock = time.monotonic):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = rate
        self.capacity = max(1, math.floor(capacity if capacity is not None else rate / 100))
        self._clock = clock
        self._origin = clock()
        self._spent = 0

    def _earned(self) -> int:
        return math.floor((self._clock() - self._origin) * self.rate + 1e-9)

    @property
    def tokens(self) -> int:
        earned = self._earned()
        if earned - self._spent > self.capacity:
            self._spent = earned - self.capacity
        return earned - self._spent

    def try_acquire(self) -> bool:
        if self.tokens >= 1:
            self._spent += 1
            return True
        return False

    def time_until_available(self) -> float:
        if self.tokens >= 1:
            return 0.0
        due = (self._spent + 1) / self.rate + self._origin
        return max(due - self._clock(), 0.0)

    async def acquire(self) -> None:
        while not self.try_acquire():
            await asyncio.sleep(max(self.time_until_available(), 1e-4))
