"""Distance kernels shared by clustering and the quality metrics.

Supported kinds: euclidean, manhattan, cosine. Cosine distance is
1 - cos(angle), range [0, 2]; a zero vector is assigned distance 1 to
everything (including itself), which keeps the value defined without
inventing a direction for it.
"""

from __future__ import annotations

import numpy as np

DISTANCE_KINDS = ("euclidean", "manhattan", "cosine")

_ZERO_EPS = 0.0  # exact-zero norm check; usage values are nonnegative reals


def _check_kind(kind: str) -> None:
    if kind not in DISTANCE_KINDS:
        raise ValueError(f"unknown distance kind {kind!r}")


def distance(a, b, kind: str = "euclidean") -> float:
    """Distance between two feature vectors of equal dimension."""
    _check_kind(kind)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if kind == "euclidean":
        return float(np.sqrt(np.sum((a - b) ** 2)))
    if kind == "manhattan":
        return float(np.sum(np.abs(a - b)))
    na = float(np.sqrt(np.dot(a, a)))
    nb = float(np.sqrt(np.dot(b, b)))
    if na <= _ZERO_EPS or nb <= _ZERO_EPS:
        return 1.0
    cos = float(np.dot(a, b)) / (na * nb)
    return 1.0 - min(1.0, max(-1.0, cos))


def point_to_rows(x, rows: np.ndarray, kind: str = "euclidean") -> np.ndarray:
    """Distances from one point to every row of a matrix (vectorized)."""
    _check_kind(kind)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != rows.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {rows.shape[1]}")
    if kind == "euclidean":
        diff = rows - x
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))
    if kind == "manhattan":
        return np.abs(rows - x).sum(axis=1)
    nx = np.sqrt(np.dot(x, x))
    nr = np.sqrt(np.einsum("ij,ij->i", rows, rows))
    out = np.ones(rows.shape[0], dtype=np.float64)
    if nx <= _ZERO_EPS:
        return out
    ok = nr > _ZERO_EPS
    cos = (rows[ok] @ x) / (nr[ok] * nx)
    out[ok] = 1.0 - np.clip(cos, -1.0, 1.0)
    return out


def pairwise(rows: np.ndarray, kind: str = "euclidean") -> np.ndarray:
    """Dense n x n distance matrix. Only for small n; O(n^2) memory."""
    n = rows.shape[0]
    out = np.empty((n, n), dtype=np.float64)
    for i in range(n):
        out[i] = point_to_rows(rows[i], rows, kind)
    return out


def max_pairwise(rows: np.ndarray, kind: str = "euclidean") -> float:
    """Largest pairwise distance, computed row by row (O(n) memory)."""
    best = 0.0
    for i in range(rows.shape[0]):
        best = max(best, float(point_to_rows(rows[i], rows, kind).max()))
    return best


def similarity(a, b, kind: str, dataset_max_distance: float) -> float:
    """Similarity in [0, 1]: 1 - d(a, b) / max distance over the dataset."""
    d = distance(a, b, kind)
    if dataset_max_distance == 0.0:
        return 1.0
    if dataset_max_distance < d:
        raise ValueError("dataset_max_distance is smaller than d(a, b)")
    return 1.0 - d / dataset_max_distance
