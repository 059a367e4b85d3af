"""
Worker-count resolution and an order-preserving parallel map.

Results are always returned in submission order, so output never depends on
the number of workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

from ..errors import ConfigurationError

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "CHEEGER_GAP_THREADS"


def resolve_workers(threads: int | None = None) -> int:
    """Explicit value first, then CHEEGER_GAP_THREADS, then 1."""
    if threads is not None:
        return max(1, threads)
    value = os.getenv(THREADS_ENV)
    if value is None or value.strip() == "":
        return 1
    try:
        return max(1, int(value))
    except ValueError as e:
        raise ConfigurationError(
            f"failed to parse environment variable {THREADS_ENV}: {value}"
        ) from e


def ordered_map(
    fn: Callable[[T], R], items: Iterable[T], workers: int = 1
) -> list[R]:
    seq: Sequence[T] = list(items)
    if workers <= 1 or len(seq) <= 1:
        return [fn(item) for item in seq]
    with ThreadPoolExecutor(max_workers=min(workers, len(seq))) as pool:
        return list(pool.map(fn, seq))
