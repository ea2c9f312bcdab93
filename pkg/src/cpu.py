"""Harness process CPU sampling."""

import asyncio
import logging

import psutil

from errors import UnsupportedPlatform

logger = logging.getLogger(__name__)


def _process() -> psutil.Process:
    try:
        process = psutil.Process()
        process.cpu_percent(interval=None)
    except (psutil.Error, NotImplementedError, OSError) as error:
        raise UnsupportedPlatform(f"process CPU accounting unavailable: {error}") from error
    return process


class CpuSampler:
    """Samples this process's CPU share every ``period`` seconds in the background.

    Values are fractions of one core, so a busy multi-threaded process can
    report more than 1.0.
    """

    def __init__(self, period: float = 1.0):
        if period <= 0:
            raise ValueError("period must be positive")
        self.period = period
        self.samples: list[float] = []
        self._process = _process()
        self._task: asyncio.Task[None] | None = None

    async def _run(self) -> None:
        while True:
            await asyncio.sleep(self.period)
            try:
                self.samples.append(self._process.cpu_percent(interval=None) / 100)
            except psutil.Error as error:
                logger.debug("cpu sampling stopped: %s", error)
                return

    def start(self) -> "CpuSampler":
        self._process.cpu_percent(interval=None)
        self._task = asyncio.create_task(self._run(), name="cpu-sampler")
        return self

    async def stop(self) -> list[float]:
        if self._task is not None:
            self._task.cancel()
            try:
                await self._task
            except asyncio.CancelledError:
                pass
            self._task = None
        return list(self.samples)

    async def __aenter__(self) -> "CpuSampler":
        return self.start()

    async def __aexit__(self, *exc: object) -> None:
        await self.stop()


async def sample_host_cpu(period: float, duration: float) -> list[float]:
    """Sample CPU for ``duration`` seconds; yields about duration/period values."""
    sampler = CpuSampler(period).start()
    await asyncio.sleep(duration + period / 2)
    return await sampler.stop()
