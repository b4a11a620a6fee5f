import functools
import logging
import random
import time
from typing import Any, Callable, Tuple, Type, TypeVar

from wikipaths.core.constants import DEFAULT_BACKOFF_BASE, DEFAULT_MAX_RETRIES

T = TypeVar("T")

logger = logging.getLogger(__name__)


def with_retry(
    max_retries: int = DEFAULT_MAX_RETRIES,
    backoff_base: float = DEFAULT_BACKOFF_BASE,
    error_counter: Any = None,
    retry_on: Tuple[Type[BaseException], ...] = (Exception,),
    sleep: Callable[[float], None] = time.sleep,
) -> Callable[[Callable[..., T]], Callable[..., T]]:
    """Retry a synchronous call with exponential backoff plus jitter.

    Only exceptions listed in ``retry_on`` are retried; anything else
    propagates on the first attempt. ``error_counter`` is any object with an
    ``inc()`` method (a Prometheus counter in production).
    """

    def decorator(func: Callable[..., T]) -> Callable[..., T]:
        @functools.wraps(func)
        def wrapper(*args, **kwargs) -> T:
            last_error = None
            for attempt in range(max_retries):
                try:
                    return func(*args, **kwargs)
                except retry_on as e:
                    last_error = e
                    if error_counter is not None:
                        error_counter.inc()
                    if attempt < max_retries - 1:
                        sleep_time = backoff_base**attempt + random.random()
                        logger.warning(
                            f"{func.__name__} failed (attempt {attempt + 1}/{max_retries}): {e}; "
                            f"retrying in {sleep_time:.2f}s"
                        )
                        sleep(sleep_time)
            raise last_error

        return wrapper

    return decorator
