import json
import logging
from functools import wraps
from typing import Any, Dict, Optional, Tuple, Type

from wikipaths.services.prometheus_metrics import RETRY_ATTEMPTS, RETRY_FAILURES

logger = logging.getLogger(__name__)


class RetryLogger:
    """Counts and logs retries and final failures of async network jobs."""

    def __init__(self):
        self.retry_counts: Dict[str, int] = {}
        self.failure_counts: Dict[str, int] = {}
        self.last_failures: Dict[str, Dict[str, Any]] = {}

    def log_retry(self, job_name: str, error: Exception, attempt: int, max_retries: int) -> None:
        self.retry_counts[job_name] = self.retry_counts.get(job_name, 0) + 1
        RETRY_ATTEMPTS.labels(job_name=job_name).inc()

        log_data = {
            "job": job_name,
            "attempt": attempt,
            "max_retries": max_retries,
            "error": str(error),
            "error_type": type(error).__name__,
            "total_retries": self.retry_counts[job_name],
        }
        logger.warning(f"Job retry: {json.dumps(log_data)}")

    def log_failure(self, job_name: str, error: Exception, final_attempt: int) -> None:
        """Log a final failure after all retries."""
        self.failure_counts[job_name] = self.failure_counts.get(job_name, 0) + 1
        RETRY_FAILURES.labels(job_name=job_name).inc()

        failure_data = {
            "job": job_name,
            "final_attempt": final_attempt,
            "error": str(error),
            "error_type": type(error).__name__,
            "total_failures": self.failure_counts[job_name],
        }
        self.last_failures[job_name] = failure_data
        logger.error(f"Job failed: {json.dumps(failure_data)}")

    def get_stats(self) -> Dict[str, Any]:
        return {
            "retry_counts": dict(self.retry_counts),
            "failure_counts": dict(self.failure_counts),
            "last_failures": dict(self.last_failures),
        }

    def reset(self) -> None:
        self.retry_counts.clear()
        self.failure_counts.clear()
        self.last_failures.clear()


# Global instance
retry_logger = RetryLogger()


def with_retry_logging(
    max_retries: int = 3,
    job_name: Optional[str] = None,
    retry_on: Tuple[Type[BaseException], ...] = (Exception,),
    tracker: Optional[RetryLogger] = None,
):
    """Retry an async callable, recording every retry and the final failure."""

    def decorator(func):
        name = job_name or func.__name__

        @wraps(func)
        async def wrapper(*args, **kwargs):
            active = tracker or retry_logger
            for attempt in range(1, max_retries + 1):
                try:
                    return await func(*args, **kwargs)
                except retry_on as e:
                    if attempt < max_retries:
                        active.log_retry(name, e, attempt, max_retries)
                    else:
                        active.log_failure(name, e, attempt)
                        raise

        return wrapper

    return decorator
