"""Symmetric / SPD matrix primitives: eigendecomposition, safeguarded
matrix logarithm and upper-triangle vectorization."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import InvalidInput, NotPositiveDefinite

DEFAULT_EIG_FLOOR = 1e-10


class EigPair(NamedTuple):
    values: np.ndarray  # non-increasing
    vectors: np.ndarray  # orthonormal columns


def as_symmetric(A) -> np.ndarray:
    """Return ``(A + A.T) / 2`` as a float array, rejecting non-finite input."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInput("matrix has non-finite entries")
    return 0.5 * (A + A.T)


def sym_eig(A) -> EigPair:
    """Eigendecomposition of a symmetric matrix with eigenvalues sorted
    in non-increasing order."""
    S = as_symmetric(A)
    w, V = np.linalg.eigh(S)
    return EigPair(w[::-1].copy(), V[:, ::-1].copy())


def spd_logm(P, eig_floor: float = DEFAULT_EIG_FLOOR) -> np.ndarray:
    """Matrix logarithm of an SPD matrix.

    Eigenvalues below ``eig_floor`` (including exact zeros from a
    rank-deficient covariance) are raised to ``eig_floor`` before taking
    the log. Eigenvalues that are clearly negative mean the input is
    indefinite and raise :class:`NotPositiveDefinite`. The negativity test
    allows for eigensolver round-off proportional to ``||P||``.
    """
    if not eig_floor > 0:
        raise InvalidInput(f"eig_floor must be positive, got {eig_floor}")
    values, vectors = sym_eig(P)
    n = values.shape[0]
    scale = float(np.max(np.abs(values))) if n else 0.0
    slack = max(eig_floor, 8 * n * np.finfo(float).eps * scale)
    if n and values[-1] < -slack:
        raise NotPositiveDefinite(
            f"matrix is indefinite: smallest eigenvalue {values[-1]:.3e}"
        )
    logs = np.log(np.maximum(values, eig_floor))
    L = (vectors * logs) @ vectors.T
    return 0.5 * (L + L.T)


def triu_vec(S) -> np.ndarray:
    """Row-major upper triangle of ``S`` including the diagonal, length n(n+1)/2."""
    S = np.asarray(S, dtype=float)
    rows, cols = np.triu_indices(S.shape[0])
    return S[rows, cols]
