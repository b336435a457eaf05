"""Hard clustering with the k-means fixed-point iteration."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from numpy.typing import ArrayLike

from .core import (
    DataLike,
    InputError,
    as_dataset,
    as_means,
    check_seed,
    derive_seed,
    pairwise_squared_distances,
)

DEFAULT_MAX_ITER = 300
DEFAULT_REL_TOL = 1e-6


@dataclass
class HardClustering:
    assignments: np.ndarray
    means: np.ndarray
    active: np.ndarray
    error_trajectory: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    @property
    def error(self) -> float:
        return self.error_trajectory[-1]

    @property
    def k(self) -> int:
        return self.means.shape[0]


def assign_clusters(data: DataLike, means: ArrayLike, active: Optional[ArrayLike] = None) -> np.ndarray:
    """Index of the nearest mean for every point.

    Squared distances are compared exactly; among equidistant means the lowest
    index wins.  Means flagged inactive are skipped.
    """
    data = as_dataset(data)
    means = as_means(means, data.n)
    d2 = pairwise_squared_distances(data.points, means)
    if active is not None:
        active = np.asarray(active, dtype=bool)
        if active.shape != (means.shape[0],):
            raise InputError("active mask must have one entry per mean")
        if not active.any():
            raise InputError("at least one cluster must be active")
        d2 = np.where(active[None, :], d2, np.inf)
    # argmin returns the first minimiser, which is the lowest-index tie rule
    return np.argmin(d2, axis=1)


def _check_assignments(assignments: ArrayLike, m: int, k: int) -> np.ndarray:
    y = np.asarray(assignments)
    if y.shape != (m,):
        raise InputError(f"expected {m} assignments, got shape {y.shape}")
    if not np.issubdtype(y.dtype, np.integer):
        raise InputError("assignments must be integers")
    if m and (y.min() < 0 or y.max() >= k):
        raise InputError(f"assignment out of range for k={k}")
    return y.astype(np.intp)


def update_means(
    data: DataLike,
    assignments: ArrayLike,
    k: int,
    previous: Optional[ArrayLike] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Centroids of the assigned points, plus the activity flags.

    Rows of empty clusters are copied from ``previous`` when given and are
    NaN otherwise.
    """
    data = as_dataset(data)
    y = _check_assignments(assignments, data.m, k)
    counts = np.bincount(y, minlength=k)
    active = counts > 0
    if previous is None:
        means = np.full((k, data.n), np.nan)
    else:
        means = as_means(previous, data.n).copy()
        if means.shape[0] != k:
            raise InputError(f"previous means have {means.shape[0]} rows, expected {k}")
    for c in np.flatnonzero(active):
        means[c] = data.points[y == c].mean(axis=0)
    return means, active


def clustering_error(data: DataLike, means: ArrayLike, assignments: ArrayLike) -> float:
    """Mean squared distance from each point to the mean of its cluster."""
    data = as_dataset(data)
    means = as_means(means, data.n)
    y = _check_assignments(assignments, data.m, means.shape[0])
    diff = data.points - means[y]
    return float(np.einsum("ij,ij->", diff, diff) / data.m)


def kmeans_fixed_point(
    data: DataLike,
    initial_means: ArrayLike,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: Optional[float] = None,
) -> HardClustering:
    """Alternate assignment and mean updates until the assignments repeat.

    One iteration is: assign points to the nearest active mean, refresh the
    activity flags, recompute the means of the active clusters, record the
    clustering error.  A cluster that loses all its points stays inactive
    and keeps its last mean.

    With ``tol`` set, iteration also stops once an iteration lowers the
    error by no more than ``tol`` times the previous error.  The result is
    flagged ``converged`` when either stopping rule fired before
    ``max_iter`` ran out.
    """
    data = as_dataset(data)
    means = as_means(initial_means, data.n).copy()
    if max_iter < 1:
        raise InputError("max_iter must be >= 1")
    if tol is not None and tol < 0:
        raise InputError("tol must be nonnegative")
    k = means.shape[0]
    active = np.ones(k, dtype=bool)
    trajectory: list[float] = []
    y = assign_clusters(data, means, active)
    converged = False
    iterations = 0
    while True:
        active = active & (np.bincount(y, minlength=k) > 0)
        means, _ = update_means(data, y, k, previous=means)
        trajectory.append(clustering_error(data, means, y))
        iterations += 1
        y_next = assign_clusters(data, means, active)
        if np.array_equal(y_next, y):
            converged = True
            break
        if tol is not None and len(trajectory) > 1:
            prev, cur = trajectory[-2], trajectory[-1]
            if prev - cur <= tol * prev:
                converged = True
                break
        if iterations >= max_iter:
            break
        y = y_next
    return HardClustering(
        assignments=y,
        means=means,
        active=active,
        error_trajectory=trajectory,
        iterations=iterations,
        converged=converged,
    )


def initial_means(data: DataLike, k: int, init: str, seed: int) -> np.ndarray:
    from .init import init_pca_partition, init_random_points

    if init == "random":
        return init_random_points(data, k, seed)
    if init == "pca":
        return init_pca_partition(data, k)
    raise InputError(f"unknown init strategy {init!r}")


def kmeans_multi_restart(
    data: DataLike,
    k: int,
    restarts: int = 10,
    init: Literal["random", "pca"] = "random",
    seed: int = 0,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: Optional[float] = None,
) -> HardClustering:
    """Best of ``restarts`` fixed-point runs by final clustering error.

    Restart ``r`` is seeded with ``derive_seed(seed, r)``.  Equal final
    errors are resolved in favour of the lower restart index.
    """
    data = as_dataset(data)
    if restarts < 1:
        raise InputError("restarts must be >= 1")
    if k < 1:
        raise InputError("k must be >= 1")
    seed = check_seed(seed)
    best = None
    for r in range(restarts):
        start = initial_means(data, k, init, derive_seed(seed, r))
        run = kmeans_fixed_point(data, start, max_iter=max_iter, tol=tol)
        if best is None or run.error < best.error:
            best = run
    return best
