"""Seeded, sharded random streams and exactly rounded column reductions.

Each shard gets its own Philox (counter-based) generator spawned from the
master seed, so output depends only on ``(seed, shards)``, never on how
shards are scheduled. Gaussian draws use numpy's ziggurat sampler.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import ValidationError

RNG_ALGORITHM = "numpy Philox4x64 via SeedSequence.spawn"
NORMAL_ALGORITHM = "ziggurat (numpy Generator.standard_normal)"


def shard_generators(seed: int, shards: int) -> list[np.random.Generator]:
    """Independent counter-based (Philox) substreams derived from one seed."""
    if shards < 1:
        raise ValidationError(f"shards = {shards} must be >= 1")
    return [np.random.Generator(np.random.Philox(ss)) for ss in np.random.SeedSequence(seed).spawn(shards)]


def shard_sizes(total: int, shards: int) -> list[int]:
    base, extra = divmod(total, shards)
    return [base + (i < extra) for i in range(shards)]


def column_stats(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-column mean (exactly rounded sums) and standard error of the mean."""
    n = samples.shape[0]
    means = np.array([math.fsum(col) / n for col in samples.T])
    if n < 2:
        return means, np.full(samples.shape[1], np.nan)
    resid = samples - means
    var = np.array([math.fsum(col) for col in resid.T * resid.T]) / (n - 1)
    return means, np.sqrt(var / n)


def run_shards(fn, jobs: list, workers: int = 1) -> list:
    """Apply ``fn`` to each job, optionally on a thread pool; order is preserved."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))
