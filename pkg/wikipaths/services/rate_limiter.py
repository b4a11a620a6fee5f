"""Politeness delay shared by page fetches and SPARQL lookups."""

import asyncio
import logging
import threading
import time
from typing import Awaitable, Callable, List, Optional

from wikipaths.core.constants import DEFAULT_POLITENESS_DELAY

logger = logging.getLogger(__name__)


class RateLimiter:
    """Enforce a minimum delay between consecutive requests.

    ``clock``, ``sleep`` and ``async_sleep`` are injectable so tests can run
    against a fake clock. Every granted request time is appended to
    ``history``.
    """

    def __init__(
        self,
        delay_seconds: float = DEFAULT_POLITENESS_DELAY,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
        async_sleep: Callable[[float], Awaitable[None]] = asyncio.sleep,
    ):
        if delay_seconds < 0:
            raise ValueError("delay_seconds must be nonnegative")
        self.delay_seconds = delay_seconds
        self._clock = clock
        self._sleep = sleep
        self._async_sleep = async_sleep
        self._last_request: Optional[float] = None
        self._thread_lock = threading.Lock()
        self._async_lock: Optional[asyncio.Lock] = None
        self.history: List[float] = []

    def _remaining(self) -> float:
        if self._last_request is None:
            return 0.0
        return self.delay_seconds - (self._clock() - self._last_request)

    def _mark(self) -> None:
        self._last_request = self._clock()
        self.history.append(self._last_request)

    def wait(self) -> None:
        """Block until the delay since the previous request has elapsed."""
        with self._thread_lock:
            remaining = self._remaining()
            if remaining > 0:
                logger.debug(f"Rate limiting: sleeping for {remaining:.2f} seconds")
                self._sleep(remaining)
            self._mark()

    async def acquire(self) -> None:
        """Async counterpart of ``wait``; concurrent callers are serialized."""
        if self._async_lock is None:
            self._async_lock = asyncio.Lock()
        async with self._async_lock:
            remaining = self._remaining()
            if remaining > 0:
                logger.debug(f"Rate limiting: waiting {remaining:.2f}s")
                await self._async_sleep(remaining)
            self._mark()
