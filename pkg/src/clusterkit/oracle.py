"""Brute-force reference results for certifying small instances.

Nothing here calls into the algorithm modules; only the shared core
types are used, so the oracles stay independent of the code they check.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .core import DataLike, InputError, as_dataset

MAX_CANDIDATES = 2_000_000
MAX_CONNECTIVITY_POINTS = 1000
_CHUNK = 1 << 15


@dataclass(frozen=True)
class BruteForceResult:
    error: float
    assignments: np.ndarray
    candidates: int


@dataclass(frozen=True)
class ReferencePartition:
    """Component id per point (0-based, -1 for noise) and core flags."""

    labels: np.ndarray
    core: np.ndarray
    n_components: int

    def clusters(self) -> set[frozenset[int]]:
        return {frozenset(np.flatnonzero(self.labels == c).tolist()) for c in range(self.n_components)}


def _assignment_block(start: int, stop: int, m: int, k: int) -> np.ndarray:
    # rows are base-k digits of start..stop-1, most significant first, which
    # is the lexicographic order of assignment vectors
    codes = np.arange(start, stop, dtype=np.int64)
    powers = k ** np.arange(m - 1, -1, -1, dtype=np.int64)
    return (codes[:, None] // powers[None, :]) % k


def brute_force_kmeans(data: DataLike, k: int) -> BruteForceResult:
    """Global minimum of the clustering error over all k**m assignments.

    For every assignment vector the means are set to the centroids of the
    non-empty clusters, which are optimal for that assignment.  Ties are
    resolved by the lexicographically smallest assignment vector.
    """
    data = as_dataset(data)
    m = data.m
    if k < 1:
        raise InputError("k must be >= 1")
    total = k**m
    if total > MAX_CANDIDATES:
        raise InputError(f"instance too large for enumeration: {k}^{m} > {MAX_CANDIDATES}")
    x = data.points
    best_err = np.inf
    best_code = -1
    evaluated = 0
    for start in range(0, total, _CHUNK):
        stop = min(start + _CHUNK, total)
        y = _assignment_block(start, stop, m, k)
        onehot = (y[:, :, None] == np.arange(k)[None, None, :]).astype(np.float64)
        counts = onehot.sum(axis=1)
        sums = np.einsum("bic,id->bcd", onehot, x)
        centroids = sums / np.maximum(counts, 1.0)[:, :, None]
        resid = x[None, :, :] - np.take_along_axis(centroids, y[:, :, None], axis=1)
        err = np.einsum("bid,bid->b", resid, resid) / m
        evaluated += stop - start
        j = int(np.argmin(err))
        if err[j] < best_err:
            best_err = float(err[j])
            best_code = start + j
    assert evaluated == total
    best = _assignment_block(best_code, best_code + 1, m, k)[0]
    return BruteForceResult(best_err, best, evaluated)


def connectivity_components(data: DataLike, eps: float, min_near: int) -> ReferencePartition:
    """Connected components of the core-point eps-graph, with border points attached.

    Core flags come from all-pairs counting (self included, closed ball).
    Components are numbered by their lowest core index; a border point
    joins the lowest-numbered component among its core neighbours.
    """
    data = as_dataset(data)
    m = data.m
    if m > MAX_CONNECTIVITY_POINTS:
        raise InputError(f"connectivity oracle limited to {MAX_CONNECTIVITY_POINTS} points")
    if eps <= 0 or min_near < 1:
        raise InputError("eps must be > 0 and min_near >= 1")
    x = data.points
    dist = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=2)
    near = dist <= eps
    core = near.sum(axis=1) >= min_near

    core_idx = np.flatnonzero(core)
    labels = np.full(m, -1, dtype=np.intp)
    if core_idx.size == 0:
        return ReferencePartition(labels, core, 0)
    graph = csr_matrix(near[np.ix_(core_idx, core_idx)])
    _, comp = connected_components(graph, directed=False)
    # renumber components in order of their lowest core index
    order = {}
    for c in comp:
        order.setdefault(int(c), len(order))
    labels[core_idx] = [order[int(c)] for c in comp]

    for i in np.flatnonzero(~core):
        adjacent = labels[core_idx[near[i, core_idx]]]
        if adjacent.size:
            labels[i] = int(adjacent.min())
    return ReferencePartition(labels, core, len(order))
