"""Ordered parallel map over independent replicates.

Results are returned in submission order, so reductions see the same
sequence for any worker count.  ``BNETLAB_WORKERS`` overrides the default.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

WORKERS_ENV = "BNETLAB_WORKERS"


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    if value:
        return max(1, int(value))
    return 1


def map_ordered(func, jobs, workers: int | None = None) -> list:
    """``[func(j) for j in jobs]``, optionally spread over processes."""
    jobs = list(jobs)
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [func(j) for j in jobs]
    chunk = max(1, len(jobs) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, jobs, chunksize=chunk))
