"""Clustering toolkit: k-means, Gaussian mixture EM and DBSCAN, with brute-force oracles."""

__version__ = "0.1.0"

from .core import Dataset, InputError, as_dataset, squared_euclidean_distance
from .dbscan import NOISE, DbscanConfig, DbscanLabels, dbscan, region_query
from .gmm import (
    CovarianceMode,
    GmmParams,
    SoftClustering,
    e_step,
    em_fit,
    em_multi_restart,
    fixed_isotropic,
    hard_assignments_from_soft,
    log_gaussian_pdf,
    m_step,
)
from .init import PrincipalDirection, init_pca_partition, init_random_points, principal_direction
from .kmeans import (
    HardClustering,
    assign_clusters,
    clustering_error,
    kmeans_fixed_point,
    kmeans_multi_restart,
    update_means,
)

__all__ = [
    "CovarianceMode",
    "Dataset",
    "DbscanConfig",
    "DbscanLabels",
    "GmmParams",
    "HardClustering",
    "InputError",
    "NOISE",
    "PrincipalDirection",
    "SoftClustering",
    "as_dataset",
    "assign_clusters",
    "clustering_error",
    "dbscan",
    "e_step",
    "em_fit",
    "em_multi_restart",
    "fixed_isotropic",
    "hard_assignments_from_soft",
    "init_pca_partition",
    "init_random_points",
    "kmeans_fixed_point",
    "kmeans_multi_restart",
    "log_gaussian_pdf",
    "m_step",
    "principal_direction",
    "region_query",
    "squared_euclidean_distance",
    "update_means",
]
