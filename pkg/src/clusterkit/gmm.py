"""Soft clustering: Gaussian mixture model fitted by expectation maximization.

All densities are handled in log space.  Responsibilities are normalised
with a per-row max subtraction so that very small isotropic variances
(the k-means limit) do not underflow.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from numpy.typing import ArrayLike
from scipy.linalg import solve_triangular

from .core import DataLike, InputError, as_dataset, as_means, check_seed, derive_seed
from .init import init_random_points

LOG_2PI = float(np.log(2.0 * np.pi))
DEGENERATE_MASS = 1e-10
REG_SCALE = 1e-6
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 300


class CovarianceError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class CovarianceMode:
    """``full`` re-estimates every covariance; ``fixed_isotropic`` pins them to sigma2 * I."""

    kind: str = "full"
    sigma2: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("full", "fixed_isotropic"):
            raise InputError(f"unknown covariance mode {self.kind!r}")
        if self.kind == "fixed_isotropic":
            if self.sigma2 is None or not np.isfinite(self.sigma2) or self.sigma2 <= 0:
                raise InputError("fixed_isotropic mode needs sigma2 > 0")
        elif self.sigma2 is not None:
            raise InputError("sigma2 only applies to fixed_isotropic mode")

    @classmethod
    def parse(cls, text: str) -> "CovarianceMode":
        """Parse ``full`` or ``isotropic:<sigma2>``."""
        if text == "full":
            return cls()
        name, sep, value = text.partition(":")
        if name == "isotropic" and sep:
            try:
                sigma2 = float(value)
            except ValueError:
                raise InputError(f"bad sigma2 in mode {text!r}") from None
            return cls("fixed_isotropic", sigma2)
        raise InputError(f"mode must be 'full' or 'isotropic:<sigma2>', got {text!r}")

    def __str__(self):
        return "full" if self.kind == "full" else f"isotropic:{self.sigma2!r}"


FULL = CovarianceMode()
ModeLike = Union[CovarianceMode, str]


def fixed_isotropic(sigma2: float) -> CovarianceMode:
    return CovarianceMode("fixed_isotropic", float(sigma2))


def _as_mode(mode: ModeLike) -> CovarianceMode:
    return mode if isinstance(mode, CovarianceMode) else CovarianceMode.parse(mode)


@dataclass
class GmmParams:
    means: np.ndarray
    covariances: np.ndarray
    priors: np.ndarray

    def __post_init__(self):
        self.means = np.array(self.means, dtype=np.float64)
        self.covariances = np.array(self.covariances, dtype=np.float64)
        self.priors = np.array(self.priors, dtype=np.float64)
        if self.means.ndim != 2:
            raise InputError("means must be a (k, n) array")
        k, n = self.means.shape
        if self.covariances.shape != (k, n, n):
            raise InputError(f"covariances must have shape {(k, n, n)}, got {self.covariances.shape}")
        if self.priors.shape != (k,):
            raise InputError(f"priors must have shape {(k,)}")
        if np.any(self.priors < 0) or abs(self.priors.sum() - 1.0) > 1e-12:
            raise InputError("priors must be nonnegative and sum to 1")
        if not np.allclose(self.covariances, np.swapaxes(self.covariances, 1, 2), rtol=0, atol=1e-12):
            raise InputError("covariances must be symmetric")

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @property
    def n(self) -> int:
        return self.means.shape[1]


@dataclass
class SoftClustering:
    responsibilities: np.ndarray
    params: GmmParams
    nll_trajectory: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    @property
    def nll(self) -> float:
        return self.nll_trajectory[-1]


def _cholesky(cov: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise CovarianceError("covariance not positive definite") from None


def _log_pdf_rows(x: np.ndarray, mean: np.ndarray, chol: np.ndarray) -> np.ndarray:
    # log det(cov) = 2 sum log diag(L); quadratic form = |L^{-1}(x - mu)|^2
    z = solve_triangular(chol, (x - mean).T, lower=True, check_finite=False)
    maha = np.einsum("ij,ij->j", z, z)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return -0.5 * (x.shape[1] * LOG_2PI + logdet + maha)


def log_gaussian_pdf(x: ArrayLike, mean: ArrayLike, cov: ArrayLike) -> float:
    """Log density of the multivariate normal N(mean, cov) at x, via Cholesky."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
    cov = np.atleast_2d(np.asarray(cov, dtype=np.float64))
    n = x.shape[0]
    if x.ndim != 1 or mean.shape != (n,) or cov.shape != (n, n):
        raise InputError("inconsistent dimensions for x, mean, cov")
    return float(_log_pdf_rows(x[None, :], mean, _cholesky(cov))[0])


def log_weighted_densities(data: DataLike, params: GmmParams) -> np.ndarray:
    """(m, k) matrix of log p_c + log N(x_i; m_c, C_c); -inf where p_c = 0."""
    data = as_dataset(data)
    if params.n != data.n:
        raise InputError(f"params have dimension {params.n}, data has {data.n}")
    out = np.full((data.m, params.k), -np.inf)
    for c in range(params.k):
        if params.priors[c] > 0:
            chol = _cholesky(params.covariances[c])
            out[:, c] = np.log(params.priors[c]) + _log_pdf_rows(data.points, params.means[c], chol)
    return out


def e_step(data: DataLike, params: GmmParams) -> tuple[np.ndarray, float]:
    """Responsibilities and the negative log-likelihood of the data."""
    logw = log_weighted_densities(data, params)
    row_max = logw.max(axis=1, keepdims=True)
    shifted = np.exp(logw - row_max)
    totals = shifted.sum(axis=1, keepdims=True)
    resp = shifted / totals
    log_lik = row_max[:, 0] + np.log(totals[:, 0])
    return resp, float(-log_lik.sum())


def regularization(data: DataLike) -> float:
    """lambda = 1e-6 times the average per-coordinate variance of the data.

    Falls back to 1e-6 when the data has no spread at all.
    """
    x = as_dataset(data).points
    avg_var = float(np.mean(np.var(x, axis=0)))
    return REG_SCALE * (avg_var if avg_var > 0 else 1.0)


def m_step(
    data: DataLike,
    responsibilities: ArrayLike,
    mode: ModeLike = FULL,
    previous: Optional[GmmParams] = None,
    reg: Optional[float] = None,
) -> GmmParams:
    """Re-estimate priors, means and covariances from responsibilities.

    A component whose effective size falls below 1e-10 is frozen: its prior
    becomes 0 and its mean and covariance are taken from ``previous`` (or
    left at the global centroid / identity scale when there is none).
    """
    data = as_dataset(data)
    mode = _as_mode(mode)
    x = data.points
    m, n = x.shape
    resp = np.asarray(responsibilities, dtype=np.float64)
    if resp.ndim != 2 or resp.shape[0] != m:
        raise InputError(f"responsibilities must have shape ({m}, k)")
    k = resp.shape[1]
    if previous is not None and previous.k != k:
        raise InputError("previous params have a different number of components")
    lam = regularization(data) if reg is None else float(reg)

    sizes = resp.sum(axis=0)
    alive = sizes >= DEGENERATE_MASS
    if not alive.any():
        raise InputError("every component has vanishing effective size")

    means = np.empty((k, n))
    covs = np.empty((k, n, n))
    eye = np.eye(n)
    for c in range(k):
        if not alive[c]:
            if previous is not None:
                means[c] = previous.means[c]
                covs[c] = previous.covariances[c]
            else:
                means[c] = x.mean(axis=0)
                covs[c] = eye * (mode.sigma2 if mode.kind == "fixed_isotropic" else 1.0)
            continue
        w = resp[:, c]
        means[c] = w @ x / sizes[c]
        if mode.kind == "fixed_isotropic":
            covs[c] = mode.sigma2 * eye
        else:
            d = x - means[c]
            cov = (w[:, None] * d).T @ d / sizes[c]
            cov = 0.5 * (cov + cov.T)
            covs[c] = cov + lam * eye

    priors = np.where(alive, sizes / m, 0.0)
    priors = priors / priors.sum()
    return GmmParams(means, covs, priors)


def em_fit(
    data: DataLike,
    k: int,
    init: GmmParams,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    mode: ModeLike = FULL,
    callback: Optional[Callable[[int, np.ndarray, GmmParams, float], None]] = None,
) -> SoftClustering:
    """Alternate E and M steps from ``init`` until the NLL settles.

    Stops once ``|nll_t - nll_{t-1}| <= tol * (1 + |nll_t|)`` or after
    ``max_iter`` M-steps.  The returned responsibilities are those of the
    returned parameters.  ``callback(t, responsibilities, params, nll)`` is
    called after every E-step, starting with t = 0 for ``init``.
    """
    data = as_dataset(data)
    mode = _as_mode(mode)
    if init.k != k:
        raise InputError(f"init has {init.k} components, k={k}")
    if tol <= 0:
        raise InputError("tol must be > 0")
    if max_iter < 1:
        raise InputError("max_iter must be >= 1")
    lam = regularization(data)
    params = init
    resp, nll = e_step(data, params)
    if callback is not None:
        callback(0, resp, params, nll)
    trajectory = [nll]
    iterations = 0
    converged = False
    while iterations < max_iter:
        params = m_step(data, resp, mode, previous=params, reg=lam)
        iterations += 1
        resp, nll = e_step(data, params)
        if callback is not None:
            callback(iterations, resp, params, nll)
        trajectory.append(nll)
        if abs(trajectory[-1] - trajectory[-2]) <= tol * (1.0 + abs(nll)):
            converged = True
            break
    return SoftClustering(resp, params, trajectory, iterations, converged)


def initial_params(data: DataLike, k: int, seed: int, mode: ModeLike = FULL) -> GmmParams:
    """Random data points as means, average coordinate variance times I, uniform priors."""
    data = as_dataset(data)
    mode = _as_mode(mode)
    means = init_random_points(data, k, seed)
    if mode.kind == "fixed_isotropic":
        scale = mode.sigma2
    else:
        scale = float(np.mean(np.var(data.points, axis=0)))
        if scale <= 0:
            scale = 1.0
    covs = np.repeat(scale * np.eye(data.n)[None], k, axis=0)
    return GmmParams(means, covs, np.full(k, 1.0 / k))


def em_multi_restart(
    data: DataLike,
    k: int,
    restarts: int = 5,
    seed: int = 0,
    mode: ModeLike = FULL,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> SoftClustering:
    """Best of ``restarts`` EM runs by final NLL; ties go to the lower restart index."""
    data = as_dataset(data)
    if restarts < 1:
        raise InputError("restarts must be >= 1")
    seed = check_seed(seed)
    best = None
    for r in range(restarts):
        init = initial_params(data, k, derive_seed(seed, r), mode)
        run = em_fit(data, k, init, max_iter=max_iter, tol=tol, mode=mode)
        if best is None or run.nll < best.nll:
            best = run
    return best


def hard_assignments_from_soft(soft: Union[SoftClustering, ArrayLike]) -> np.ndarray:
    """Most responsible component per point, lowest index on ties."""
    resp = soft.responsibilities if isinstance(soft, SoftClustering) else np.asarray(soft)
    return np.argmax(resp, axis=1)


def shared_means_params(means: ArrayLike, sigma2: float, priors: Optional[ArrayLike] = None) -> GmmParams:
    """Isotropic mixture with the given means, sigma2 * I covariances and (default) uniform priors."""
    means = np.asarray(means, dtype=np.float64)
    means = as_means(means, means.shape[-1])
    k, n = means.shape
    priors = np.full(k, 1.0 / k) if priors is None else priors
    return GmmParams(means, np.repeat(sigma2 * np.eye(n)[None], k, axis=0), priors)
