"""Worker-count plumbing for probe-heavy loops.

Point sets are chunked and evaluated on a thread pool (numpy releases the
GIL inside the big matmuls); chunks are concatenated in order, so results
are identical to the sequential path.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

_ENV_VAR = "HOMCOVER_THREADS"
_threads = None

_PARALLEL_MIN_POINTS = 50_000


def get_threads() -> int:
    if _threads is not None:
        return _threads
    env = os.environ.get(_ENV_VAR)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def set_threads(count) -> None:
    global _threads
    _threads = max(1, int(count)) if count else None


def chunked_mask(fn, points: np.ndarray) -> np.ndarray:
    """Evaluate a points -> bool-mask function, chunk-parallel when large."""
    n_threads = get_threads()
    m = points.shape[0]
    if n_threads <= 1 or m < _PARALLEL_MIN_POINTS:
        return fn(points)
    chunks = np.array_split(points, n_threads)
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        parts = list(pool.map(fn, chunks))
    return np.concatenate(parts)
