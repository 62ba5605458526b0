"""Thread fan-out and seed derivation shared by the samplers."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

# stream tags keep the tau sampler and the quadrature sampler independent
STREAM_SUBLEVEL = 1
STREAM_TRILINEAR = 2


def thread_count() -> int:
    env = os.environ.get("OSCDECAY_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def pmap(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Map in a thread pool; results come back in input order."""
    items = list(items)
    n = thread_count()
    if n == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))


def stream_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), stream, index]))
