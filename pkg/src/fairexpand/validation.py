"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

from .errors import DatasetError, GraphError


def check_feature_matrix(x, name: str = "features") -> np.ndarray:
    """Coerce to a finite 2-D float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise DatasetError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise DatasetError(f"{name} contains non-finite entries")
    return arr


def check_labels(y, n: int, name: str = "labels") -> np.ndarray:
    """Coerce to a 1-D int64 label array of length ``n`` with values >= 0."""
    arr = np.asarray(y, dtype=np.int64)
    if arr.ndim != 1:
        raise DatasetError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.shape[0] != n:
        raise DatasetError(f"{name} has {arr.shape[0]} rows, expected {n}")
    if arr.size and arr.min() < 0:
        raise DatasetError(f"{name} contains negative class ids")
    return arr


def check_node_subset(nodes, n: int, name: str = "mask") -> np.ndarray:
    """Coerce to a 1-D int64 node-id array with all ids in ``[0, n)``."""
    arr = np.asarray(nodes, dtype=np.int64).ravel()
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise GraphError(f"{name} contains node ids outside [0, {n})")
    return arr


def check_same_rows(a: np.ndarray, n: int, name: str) -> None:
    if a.shape[0] != n:
        raise GraphError(f"{name} has {a.shape[0]} rows, expected {n}")
