"""Ordered map over replicate indices, optionally in worker processes."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def indexed_map(func, indices, jobs: int = 1, chunks_per_job: int = 4):
    """``[func(i) for i in indices]``; ``func`` must be picklable when ``jobs > 1``.

    Results are returned in index order whatever the completion order, and
    each call must derive its randomness from its index alone.
    """
    indices = list(indices)
    if jobs is None or jobs <= 1 or len(indices) <= 1:
        return [func(i) for i in indices]
    n_chunks = max(1, min(len(indices), jobs * chunks_per_job))
    size = -(-len(indices) // n_chunks)
    batches = [indices[k : k + size] for k in range(0, len(indices), size)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_Batch(func), batches))
    return [item for part in parts for item in part]


class _Batch:
    def __init__(self, func):
        self.func = func

    def __call__(self, batch):
        return [self.func(i) for i in batch]
