"""Deterministic random streams and replicate fan-out.

Every replicate ``r`` of a run seeded with ``seed`` draws from
``PCG64(SeedSequence(seed, spawn_key=(r, purpose)))``.  The stream for a
replicate therefore depends only on ``(seed, r, purpose)``, never on how
replicates are scheduled across workers.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

RNG_ALGORITHM = "numpy-PCG64/SeedSequence"
DEFAULT_SEED = 20210127
THREADS_ENV = "REPAVG_THREADS"

# stream purposes
PAIRS = 0
CLOCK = 1
PARTICLES = 2


def replicate_rng(seed: int, replicate: int = 0, purpose: int = PAIRS) -> np.random.Generator:
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(seed, spawn_key=(replicate, purpose))
    return np.random.Generator(np.random.PCG64(ss))


def resolve_threads(threads: int = 0) -> int:
    if threads and threads > 0:
        return threads
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        if value > 0:
            return value
    return os.cpu_count() or 1


def map_replicates(fn, replicates: int, threads: int = 0) -> list:
    """Return ``[fn(0), ..., fn(replicates - 1)]``, possibly computed in parallel.

    Output order is the replicate order regardless of the worker count.
    """
    workers = min(resolve_threads(threads), max(replicates, 1))
    if workers <= 1:
        return [fn(r) for r in range(replicates)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(replicates)))
