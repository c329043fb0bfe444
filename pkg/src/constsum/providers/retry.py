"""Bounded retry with exponential backoff for transient provider failures."""

from __future__ import annotations

import time
from typing import Callable, TypeVar

from .base import RateLimitError, TransportError

T = TypeVar("T")

RETRYABLE = (TransportError, RateLimitError)


def with_retries(
    fn: Callable[[], T],
    *,
    attempts: int = 3,
    base_delay: float = 1.0,
    sleep: Callable[[float], None] = time.sleep,
) -> T:
    """Call fn up to `attempts` times; delays double after each failure.

    Only transport and rate-limit errors are retried; anything else (bad
    request, context overflow, parse problems) propagates immediately.
    """
    if attempts < 1:
        raise ValueError("attempts must be >= 1")
    for attempt in range(attempts):
        try:
            return fn()
        except RETRYABLE:
            if attempt == attempts - 1:
                raise
            sleep(base_delay * (2 ** attempt))
    raise AssertionError("unreachable")
