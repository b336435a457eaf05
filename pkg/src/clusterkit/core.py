"""Shared types and numeric primitives.

Cluster indices are 0-based throughout the library; serialized output
(CSV, reports) shifts them to 1-based.  Noise in DBSCAN output is ``-1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from numpy.typing import ArrayLike

SEED_MAX = 2**64 - 1


class InputError(ValueError):
    """Malformed input: wrong shape, out-of-range index, invalid parameter."""


@dataclass(frozen=True)
class Dataset:
    """m feature vectors of dimension n, stored as a read-only (m, n) float array."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2:
            raise InputError(f"points must be a 2-D array, got ndim={pts.ndim}")
        if pts.shape[0] < 1:
            raise InputError("dataset must contain at least one point")
        if pts.shape[1] < 1:
            raise InputError("points must have dimension >= 1")
        if not np.all(np.isfinite(pts)):
            bad = int(np.argwhere(~np.isfinite(pts))[0, 0])
            raise InputError(f"non-finite coordinate in point {bad}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.m

    def __getitem__(self, i):
        return self.points[i]


DataLike = Union[Dataset, ArrayLike]


def as_dataset(data: DataLike) -> Dataset:
    if isinstance(data, Dataset):
        return data
    return Dataset(np.asarray(data, dtype=np.float64))


def as_means(means: ArrayLike, n: int) -> np.ndarray:
    """Coerce cluster means to a (k, n) float array, checking the dimension."""
    arr = np.array(means, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if n > 1 or arr.size == 1 else arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise InputError("means must be a non-empty (k, n) array")
    if arr.shape[1] != n:
        raise InputError(f"means have dimension {arr.shape[1]}, data has {n}")
    return arr


def squared_euclidean_distance(a: ArrayLike, b: ArrayLike) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise InputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    return float(np.sum(diff * diff))


def pairwise_squared_distances(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """(p, q) matrix of squared distances, formed from explicit differences.

    Differences are taken coordinate-wise rather than through the
    ``|x|^2 - 2 x.y + |y|^2`` expansion so that equal distances compare equal.
    """
    diff = x[:, None, :] - y[None, :, :]
    return np.sum(diff * diff, axis=-1)


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise InputError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 stream keyed by a 64-bit seed; identical seeds give identical streams."""
    return np.random.Generator(np.random.PCG64(check_seed(seed)))


def derive_seed(seed: int, index: int) -> int:
    """Sub-seed for restart ``index``, fixed before any work is dispatched."""
    ss = np.random.SeedSequence([check_seed(seed), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def standard_normal(rng: np.random.Generator, size: int) -> np.ndarray:
    """Box-Muller transform of the generator's uniform stream.

    Uniforms are consumed in pairs (u1, u2); u1 is taken from (0, 1] so the
    logarithm is finite.  Each pair yields ``r cos(2 pi u2)`` then
    ``r sin(2 pi u2)``.
    """
    pairs = (size + 1) // 2
    u = rng.random(2 * pairs)
    u1 = 1.0 - u[0::2]
    u2 = u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(2.0 * np.pi * u2)
    z[1::2] = r * np.sin(2.0 * np.pi * u2)
    return z[:size]
