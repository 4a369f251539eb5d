"""Ordered worker pool sized by ``SASAKIGEO_THREADS`` (0 or unset: one per CPU)."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

from .errors import ConfigurationError

T = TypeVar("T")
R = TypeVar("R")

ENV_VAR = "SASAKIGEO_THREADS"


def worker_count() -> int:
    raw = os.environ.get(ENV_VAR, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigurationError(f"{ENV_VAR} must be an integer, got {raw!r}") from exc
    if n < 0:
        raise ConfigurationError(f"{ENV_VAR} must be >= 0, got {n}")
    return n or (os.cpu_count() or 1)


def ordered_map(fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """``[fn(i) for i in items]``, spread over the worker pool; order is preserved."""
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
