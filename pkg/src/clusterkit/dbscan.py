"""Density-based clustering (DBSCAN) over closed Euclidean eps-balls."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .core import DataLike, InputError, as_dataset, pairwise_squared_distances

NOISE = -1


@dataclass(frozen=True)
class DbscanConfig:
    eps: float
    min_near: int

    def __post_init__(self):
        if not np.isfinite(self.eps) or self.eps <= 0:
            raise InputError(f"eps must be > 0, got {self.eps}")
        if int(self.min_near) != self.min_near or self.min_near < 1:
            raise InputError(f"min_near must be an integer >= 1, got {self.min_near}")


@dataclass
class DbscanLabels:
    """Cluster id per point (0..n_clusters-1) or ``NOISE``, plus core flags."""

    labels: np.ndarray
    core: np.ndarray
    n_clusters: int

    @property
    def noise(self) -> np.ndarray:
        return self.labels == NOISE


def region_query(data: DataLike, i: int, eps: float) -> np.ndarray:
    """Indices j (ascending, i included) with |x_i - x_j| <= eps."""
    data = as_dataset(data)
    if not 0 <= i < data.m:
        raise InputError(f"point index {i} out of range for m={data.m}")
    if eps <= 0:
        raise InputError("eps must be > 0")
    d2 = pairwise_squared_distances(data.points[i : i + 1], data.points)[0]
    return np.flatnonzero(d2 <= eps * eps)


def _neighborhoods(x: np.ndarray, eps: float) -> list[np.ndarray]:
    within = pairwise_squared_distances(x, x) <= eps * eps
    return [np.flatnonzero(row) for row in within]


def dbscan(data: DataLike, config: DbscanConfig) -> DbscanLabels:
    """Label every point with a cluster id or as noise.

    Points are scanned in index order; each unlabelled core point seeds a
    new cluster that is grown breadth-first through core points.  A border
    point (non-core, within eps of a core point) joins the first cluster
    whose expansion reaches it.
    """
    data = as_dataset(data)
    neighbors = _neighborhoods(data.points, config.eps)
    core = np.array([len(nb) >= config.min_near for nb in neighbors], dtype=bool)
    labels = np.full(data.m, NOISE, dtype=np.intp)
    n_clusters = 0
    for i in range(data.m):
        if not core[i] or labels[i] != NOISE:
            continue
        cid = n_clusters
        n_clusters += 1
        labels[i] = cid
        queue = deque([i])
        while queue:
            p = queue.popleft()
            for q in neighbors[p]:
                if labels[q] != NOISE:
                    continue
                labels[q] = cid
                if core[q]:
                    queue.append(q)
    return DbscanLabels(labels, core, n_clusters)
