"""Ordered map over independent jobs, optionally across processes.

Results come back in submission order and every job carries its own
seed, so the output is identical for any worker count.
"""

from __future__ import annotations

import multiprocessing as mp
import os


def default_workers() -> int:
    env = os.environ.get("Z2AUTOMATON_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def pmap(fn, jobs, workers: int = 1, chunksize: int | None = None):
    """Map fn over jobs preserving order; workers<=1 runs in-process."""
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    if chunksize is None:
        chunksize = max(1, len(jobs) // (8 * workers))
    ctx = mp.get_context("fork")
    with ctx.Pool(processes=min(workers, len(jobs))) as pool:
        return list(pool.imap(fn, jobs, chunksize=chunksize))
