"""Monte Carlo summaries with deterministic, thread-count-independent reduction."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    replicas: int

    @property
    def three_sigma(self) -> float:
        return 3.0 * self.stderr


def summarize(values) -> McEstimate:
    """Mean and standard error with a fixed-order reduction.

    The input order is the replica order, so the sums — and hence the
    emitted digits — do not depend on how many workers produced the values.
    """
    v = np.asarray(values, dtype=float)
    n = len(v)
    mean = float(np.sum(v) / n)
    if n < 2:
        return McEstimate(mean, float("nan"), n)
    var = float(np.sum((v - mean) ** 2) / (n - 1))
    return McEstimate(mean, (var / n) ** 0.5, n)


def replica_map(fn, replicas: int, threads: int = 1) -> list:
    """Evaluate fn(replica_index) for each replica, in replica order.

    With threads > 1 the evaluations run on a pool, but results are collected
    by index, so downstream reductions see the same ordering either way.
    """
    if threads <= 1:
        return [fn(r) for r in range(replicas)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(replicas)))
