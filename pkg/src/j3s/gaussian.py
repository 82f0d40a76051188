"""Statistical (Gaussian) representation of a sample.

Pipeline: Hellinger map -> mean/covariance -> regularized-MLE robust
covariance -> SPD embedding of (mean, covariance) -> log-Euclidean vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig, InvalidValue, NegativeFeature, TooFewColumns
from .spd import DEFAULT_EIG_FLOOR, as_symmetric, spd_logm, sym_eig, triu_vec


@dataclass(frozen=True)
class FeatureMatrix:
    """A d x m sample: one column per image (image set) or per channel
    (single-image feature map)."""

    data: np.ndarray
    label: int | None = None
    sample_id: str = ""
    kind: str = "image_set"

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise InvalidValue(
                f"sample {self.sample_id!r}: expected a non-empty 2-D matrix, got shape {data.shape}"
            )
        if not np.all(np.isfinite(data)):
            raise InvalidValue(f"sample {self.sample_id!r}: non-finite entries")
        object.__setattr__(self, "data", data)

    @property
    def d(self) -> int:
        return self.data.shape[0]

    @property
    def m(self) -> int:
        return self.data.shape[1]

    def with_data(self, data) -> "FeatureMatrix":
        return FeatureMatrix(data, self.label, self.sample_id, self.kind)


@dataclass(frozen=True)
class GaussianConfig:
    cov_shrinkage: float = 0.5
    beta: float = 1.0
    use_hellinger: bool = True
    eig_floor: float = DEFAULT_EIG_FLOOR

    def __post_init__(self):
        if not 0.0 < self.cov_shrinkage < 1.0:
            raise InvalidConfig(f"cov_shrinkage must lie in (0, 1), got {self.cov_shrinkage}")
        if not self.beta > 0:
            raise InvalidConfig(f"beta must be positive, got {self.beta}")
        if not self.eig_floor > 0:
            raise InvalidConfig(f"eig_floor must be positive, got {self.eig_floor}")


@dataclass(frozen=True)
class GaussianDescriptor:
    mean: np.ndarray
    covariance: np.ndarray
    robust_cov: np.ndarray
    embedding: np.ndarray
    log_embedding: np.ndarray
    stat_vector: np.ndarray = field(repr=False)


def _as_feature_matrix(X) -> FeatureMatrix:
    return X if isinstance(X, FeatureMatrix) else FeatureMatrix(np.asarray(X, dtype=float))


def hellinger_map(X, enabled: bool = True) -> FeatureMatrix:
    """Explicit feature map of the Hellinger kernel (entrywise square root).

    Identity when ``enabled`` is false. Negative entries cannot be mapped
    and raise :class:`NegativeFeature`.
    """
    X = _as_feature_matrix(X)
    if not enabled:
        return X
    neg = np.argwhere(X.data < 0)
    if neg.size:
        i, j = neg[0]
        raise NegativeFeature(
            f"sample {X.sample_id!r}: negative feature {float(X.data[i, j])!r} at index ({i}, {j}); "
            "disable the Hellinger map for signed features"
        )
    return X.with_data(np.sqrt(X.data))


def gaussian_fit(X):
    """Mean and biased (1/m) covariance of the columns of ``X``.

    Returns
    -------
    mean : (d,) ndarray
    C : (d, d) ndarray
        ``(1/m) X J X^T`` with the m x m centering matrix ``J``.
    """
    data = X.data if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=float)
    m = data.shape[1]
    if m < 2:
        raise TooFewColumns(f"covariance needs at least 2 columns, got {m}")
    mean = data.mean(axis=1)
    centered = data - mean[:, None]
    C = centered @ centered.T / m
    return mean, 0.5 * (C + C.T)


def robust_eigenvalues(delta, cov_shrinkage: float) -> np.ndarray:
    """Per-eigenvalue closed form of the von Neumann-regularized MLE.

    Each output is the non-negative root of
    ``a*lam**2 + (1 - a)*lam - delta = 0`` with ``a = cov_shrinkage``.
    """
    a = cov_shrinkage
    if not 0.0 < a < 1.0:
        raise InvalidConfig(f"cov_shrinkage must lie in (0, 1), got {a}")
    delta = np.asarray(delta, dtype=float)
    b = (1.0 - a) / (2.0 * a)
    # b - sqrt(b^2 + delta/a) rewritten to avoid cancellation for small delta
    return (delta / a) / (np.sqrt(b * b + delta / a) + b)


def robust_covariance(C, cov_shrinkage: float = 0.5) -> np.ndarray:
    """Shrink a sample covariance toward identity through its eigenvalues.

    Eigenvalues of ``C`` down to ``-1e-10`` are treated as round-off and
    clamped to zero; anything more negative is rejected.
    """
    if not 0.0 < cov_shrinkage < 1.0:
        raise InvalidConfig(f"cov_shrinkage must lie in (0, 1), got {cov_shrinkage}")
    delta, U = sym_eig(C)
    if delta.size and delta[-1] < -1e-10 * max(1.0, abs(delta[0])):
        raise InvalidValue(f"covariance is not PSD: smallest eigenvalue {delta[-1]:.3e}")
    lam = robust_eigenvalues(np.maximum(delta, 0.0), cov_shrinkage)
    S = (U * lam) @ U.T
    return 0.5 * (S + S.T)


def embed_spd(mean, cov, beta: float = 1.0) -> np.ndarray:
    """Embed a Gaussian (mean, cov) as the (d+1) x (d+1) SPD matrix
    ``[[cov + beta^2 mu mu^T, beta mu], [beta mu^T, 1]]``."""
    if not beta > 0:
        raise InvalidConfig(f"beta must be positive, got {beta}")
    mu = np.asarray(mean, dtype=float).ravel()
    cov = as_symmetric(cov)
    d = mu.shape[0]
    if cov.shape != (d, d):
        raise InvalidValue(f"mean has length {d} but covariance is {cov.shape}")
    bmu = beta * mu
    P = np.empty((d + 1, d + 1))
    P[:d, :d] = cov + np.outer(bmu, bmu)
    P[:d, d] = bmu
    P[d, :d] = bmu
    P[d, d] = 1.0
    return 0.5 * (P + P.T)


def build_descriptor(X, cfg: GaussianConfig | None = None) -> GaussianDescriptor:
    cfg = cfg or GaussianConfig()
    mapped = hellinger_map(_as_feature_matrix(X), cfg.use_hellinger)
    mean, C = gaussian_fit(mapped)
    robust = robust_covariance(C, cfg.cov_shrinkage)
    P = embed_spd(mean, robust, cfg.beta)
    logP = spd_logm(P, cfg.eig_floor)
    return GaussianDescriptor(
        mean=mean,
        covariance=C,
        robust_cov=robust,
        embedding=P,
        log_embedding=logP,
        stat_vector=triu_vec(logP),
    )
