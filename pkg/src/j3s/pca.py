"""Principal component transform used to shrink dictionary row dimension."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidConfig


@dataclass(frozen=True)
class PcaTransform:
    mean: np.ndarray  # (d,)
    components: np.ndarray  # (k, d), orthonormal rows
    explained_variance: np.ndarray  # (k,), non-increasing

    @property
    def k(self) -> int:
        return self.components.shape[0]

    @property
    def d(self) -> int:
        return self.components.shape[1]


def _fix_signs(components: np.ndarray) -> np.ndarray:
    # largest-magnitude coordinate of each component made positive (first on ties)
    idx = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), idx])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


def pca_fit(rows, k: int | None = None) -> PcaTransform:
    """Fit a k-component PCA on an N x d matrix of observations.

    ``k`` defaults to ``min(N - 1, d)``, the rank bound of N centered points.
    No whitening is applied.
    """
    X = np.asarray(rows, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch(f"expected an N x d matrix, got shape {X.shape}")
    N, d = X.shape
    if N < 2:
        raise InvalidConfig(f"PCA needs at least 2 rows, got {N}")
    k_max = min(N - 1, d)
    if k is None:
        k = k_max
    if not 1 <= k <= k_max:
        raise InvalidConfig(f"k={k} out of range [1, {k_max}] for {N} rows of dimension {d}")
    mean = X.mean(axis=0)
    _, s, Vt = np.linalg.svd(X - mean, full_matrices=False)
    components = _fix_signs(Vt[:k])
    return PcaTransform(mean=mean, components=components, explained_variance=s[:k] ** 2 / N)


def pca_apply(t: PcaTransform, rows) -> np.ndarray:
    """Project rows (M x d, or a single length-d vector) onto the components."""
    X = np.asarray(rows, dtype=float)
    if X.shape[-1] != t.d:
        raise DimensionMismatch(f"transform expects dimension {t.d}, got {X.shape[-1]}")
    return (X - t.mean) @ t.components.T


def pca_inverse(t: PcaTransform, projected) -> np.ndarray:
    return np.asarray(projected, dtype=float) @ t.components + t.mean
