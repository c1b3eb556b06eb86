from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def worker_count() -> int:
    """Thread cap from ``FRACTREE_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("FRACTREE_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def pmap(fn: Callable[[T], R], items: Iterable[T], min_items: int = 32) -> list[R]:
    """Order-preserving map; threads only pay off for larger batches."""
    items = list(items)
    n = worker_count()
    if n == 1 or len(items) < min_items:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
