"""Initial cluster means: random data points or a split along the principal direction."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import DataLike, InputError, as_dataset, make_rng


class DegenerateInitWarning(UserWarning):
    """The principal-direction split could not separate the data."""


class PowerIterationError(RuntimeError):
    def __init__(self, message: str, last_iterate: np.ndarray | None = None):
        super().__init__(message)
        self.last_iterate = last_iterate


@dataclass(frozen=True)
class PrincipalDirection:
    direction: np.ndarray
    variance: float
    iterations: int = 0


def random_point_indices(data: DataLike, k: int, seed: int) -> np.ndarray:
    data = as_dataset(data)
    if k < 1:
        raise InputError("k must be >= 1")
    if k > data.m:
        raise InputError(f"cannot pick {k} distinct points from {data.m}")
    return make_rng(seed).choice(data.m, size=k, replace=False)


def init_random_points(data: DataLike, k: int, seed: int) -> np.ndarray:
    """k distinct data points drawn without replacement."""
    data = as_dataset(data)
    return data.points[random_point_indices(data, k, seed)].copy()


def second_moment(data: DataLike) -> np.ndarray:
    """Uncentered second-moment matrix (1/m) sum_i x_i x_i^T."""
    x = as_dataset(data).points
    return x.T @ x / x.shape[0]


def _sign_normalize(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(v)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def _power_iterate(M: np.ndarray, v: np.ndarray, tol: float, max_iter: int, squaring_period: int = 50):
    # Stop when the estimated angle to the fixed point is small.  Successive
    # steps shrink geometrically by the eigenvalue ratio r, so the remaining
    # angle is about step / (1 - r); using only the step would stop early
    # when the two leading eigenvalues are close.  If that happens for
    # squaring_period iterations, the operator is squared (r -> r^2).
    A = M
    prev_step = None
    since_squaring = 0
    for it in range(1, max_iter + 1):
        w = A @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return v, it, False, True
        w = w / norm
        if np.dot(w, v) < 0:
            w = -w
        step = np.linalg.norm(w - v)
        ratio = 0.0
        if prev_step is not None and prev_step > 0:
            ratio = min(step / prev_step, 0.999999)
        remaining = step / (1.0 - ratio)
        v = w
        # 1 - cos(angle) ~ angle^2 / 2; stopping at angle^2 <= tol keeps both
        # the cosine distance and the relative Rayleigh-quotient error below tol
        if remaining * remaining <= tol:
            return v, it, True, False
        prev_step = step
        since_squaring += 1
        if since_squaring >= squaring_period:
            A = A @ A
            A = A / np.linalg.norm(A)
            prev_step = None
            since_squaring = 0
    return v, max_iter, False, False


def principal_direction(data: DataLike, tol: float = 1e-10, max_iter: int = 1000) -> PrincipalDirection:
    """Dominant eigenvector of the uncentered second-moment matrix.

    Power iteration from the normalised all-ones vector.  If that start lands
    on a non-dominant eigenvector (its Rayleigh quotient is below the average
    eigenvalue) the iteration is repeated from the coordinate axis with the
    largest second moment.  The sign is fixed so the first nonzero coordinate
    is positive.
    """
    data = as_dataset(data)
    M = second_moment(data)
    trace = float(np.trace(M))
    if trace == 0.0:
        raise InputError("degenerate second moment: all points are zero")
    n = M.shape[0]
    starts = [np.ones(n) / np.sqrt(n)]
    axis = np.zeros(n)
    axis[int(np.argmax(np.diag(M)))] = 1.0
    starts.append(axis)

    for start in starts:
        v, iterations, converged, collapsed = _power_iterate(M, start, tol, max_iter)
        if collapsed:
            continue
        if not converged:
            raise PowerIterationError(
                f"power iteration did not converge in {max_iter} iterations", last_iterate=v
            )
        v = v / np.linalg.norm(v)
        variance = float(v @ M @ v)
        if variance >= trace / n * (1 - 1e-12):
            return PrincipalDirection(_sign_normalize(v), max(variance, 0.0), iterations)
    raise PowerIterationError("power iteration found no dominant direction", last_iterate=v)


def init_pca_partition(data: DataLike, k: int) -> np.ndarray:
    """Split the range of principal-direction projections into k equal intervals.

    Each initial mean is the centroid of the points whose projection falls
    in its interval (the last interval is closed on the right).  An empty
    interval takes the point whose projection is nearest the interval
    midpoint.  When every projection is equal the data cannot be split;
    a ``DegenerateInitWarning`` is issued and random points (seed 0) are
    returned instead.
    """
    data = as_dataset(data)
    if k < 1:
        raise InputError("k must be >= 1")
    try:
        v = principal_direction(data).direction
    except InputError:
        v = None
    if v is not None:
        t = data.points @ v
        lo, hi = float(t.min()), float(t.max())
    if v is None or hi <= lo:
        warnings.warn("all principal projections coincide; using random points", DegenerateInitWarning)
        return init_random_points(data, k, 0)

    width = (hi - lo) / k
    bins = np.minimum(np.floor((t - lo) / width).astype(np.intp), k - 1)
    means = np.empty((k, data.n))
    for c in range(k):
        members = bins == c
        if members.any():
            means[c] = data.points[members].mean(axis=0)
        else:
            mid = lo + (c + 0.5) * width
            means[c] = data.points[int(np.argmin(np.abs(t - mid)))]
    return means
