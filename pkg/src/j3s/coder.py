"""Joint statistical/spatial sparse coding.

For a query with statistical vector ``q_stat`` and spatial vector ``q_spat``
the coder minimizes

    theta ||q_stat - U a||^2 + (1 - theta) ||q_spat - V g||^2
        + lambda1 ||a||^2 + lambda2 ||g||^2 + lambda3 sum_k ||(a_k, g_k)||_2

by iteratively reweighted least squares: the group norm is replaced by a
weighted quadratic with diagonal weights ``G``, ``a`` and ``g`` are each the
solution of a ridge-type linear system, and ``G`` is refreshed from the new
coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import DimensionMismatch, EmptyClass, InvalidConfig, NumericalDivergence, SingularSystem
from .pca import PcaTransform, pca_apply, pca_fit


@dataclass(frozen=True)
class J3SParams:
    theta: float = 0.6
    lambda1: float = 1e-3
    lambda2: float = 1e-3
    lambda3: float = 1e-3
    max_iters: int = 50
    tol: float = 1e-6
    eps: float = 1e-16

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise InvalidConfig(f"theta must lie in (0, 1), got {self.theta}")
        for name in ("lambda1", "lambda2", "lambda3"):
            if not getattr(self, name) >= 0:
                raise InvalidConfig(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.max_iters < 1:
            raise InvalidConfig(f"max_iters must be positive, got {self.max_iters}")
        if not self.tol > 0 or not self.eps > 0:
            raise InvalidConfig("tol and eps must be positive")


@dataclass(frozen=True)
class JointCode:
    alpha: np.ndarray
    gamma: np.ndarray
    g_diag: np.ndarray
    loss_trace: list
    iterations_used: int
    converged: bool

    @property
    def loss(self) -> float:
        return self.loss_trace[-1]


@dataclass(frozen=True)
class RowReducer:
    """Maps length-d dictionary columns (and queries) to a short coordinate vector.

    With ``basis`` set the map is the linear isometry ``x -> basis @ x``
    onto the span of the centered training columns plus their mean, so
    residual norms of anything inside the training span are preserved
    exactly. Without it the map is the plain centered PCA projection.
    """

    pca: PcaTransform
    basis: np.ndarray | None = None

    @property
    def k(self) -> int:
        return self.pca.k if self.basis is None else self.basis.shape[0]

    def apply(self, columns) -> np.ndarray:
        X = np.asarray(columns, dtype=float)
        if self.basis is not None:
            if X.shape[0] != self.basis.shape[1]:
                raise DimensionMismatch(f"reducer expects dimension {self.basis.shape[1]}, got {X.shape[0]}")
            return self.basis @ X
        if X.ndim == 1:
            return pca_apply(self.pca, X)
        return pca_apply(self.pca, X.T).T


def fit_reducer(columns: np.ndarray, isometric: bool = True) -> RowReducer:
    """PCA over the columns of a d x N dictionary (rows are observations)."""
    t = pca_fit(columns.T)
    if not isometric:
        return RowReducer(t)
    basis = t.components
    off = t.mean - basis.T @ (basis @ t.mean)
    norm = np.linalg.norm(off)
    if norm > 1e-12 * max(1.0, np.linalg.norm(t.mean)):
        basis = np.vstack([basis, off / norm])
    return RowReducer(t, basis)


@dataclass(frozen=True)
class JointDictionary:
    U: np.ndarray  # d1 x N
    V: np.ndarray  # d2 x N
    labels: np.ndarray  # (N,)
    class_ranges: dict = field(repr=False)  # label -> (start, stop)
    stat_reducer: RowReducer | None = None
    spat_reducer: RowReducer | None = None

    @property
    def n_atoms(self) -> int:
        return self.U.shape[1]

    @property
    def classes(self) -> list:
        return list(self.class_ranges)

    def project_query(self, q_stat, q_spat):
        q_stat = np.asarray(q_stat, dtype=float)
        q_spat = np.asarray(q_spat, dtype=float)
        if self.stat_reducer is not None:
            q_stat = self.stat_reducer.apply(q_stat)
        if self.spat_reducer is not None:
            q_spat = self.spat_reducer.apply(q_spat)
        if q_stat.shape != (self.U.shape[0],) or q_spat.shape != (self.V.shape[0],):
            raise DimensionMismatch(
                f"query dimensions {q_stat.shape}/{q_spat.shape} do not match "
                f"dictionary rows {self.U.shape[0]}/{self.V.shape[0]}"
            )
        return q_stat, q_spat

    def sub_dictionary(self, label):
        a, b = self.class_ranges[label]
        return self.U[:, a:b], self.V[:, a:b]


def _vector(obj, attr):
    return np.asarray(getattr(obj, attr, obj), dtype=float).ravel()


def assemble_dictionaries(train, use_pca: bool = False, isometric_pca: bool = True,
                          pca_extra=None) -> JointDictionary:
    """Stack training samples into class-contiguous dictionaries.

    Parameters
    ----------
    train : iterable of (stat, spat, label)
        ``stat`` is a GaussianDescriptor or its statistical vector, ``spat``
        a UnitaryDictionary or its spatial vector.
    use_pca : bool
        Reduce both dictionaries' row dimension with PCA fitted on the
        training columns; queries are mapped with the same transforms.
    isometric_pca : bool
        Keep the extra mean-offset coordinate so coding of in-span queries
        is unchanged by the reduction (see :class:`RowReducer`). False gives
        the plain ``min(N - 1, d)``-component projection.
    pca_extra : iterable of (stat, spat), optional
        Additional samples (e.g. probes) included in the PCA fit only; they
        do not become dictionary atoms.
    """
    train = list(train)
    if not train:
        raise EmptyClass("no training samples")
    stats = [_vector(s, "stat_vector") for s, _, _ in train]
    spats = [_vector(v, "spatial_vector") for _, v, _ in train]
    labels = [lab for _, _, lab in train]
    if len({x.shape for x in stats}) != 1 or len({x.shape for x in spats}) != 1:
        raise DimensionMismatch("training samples have mixed statistical or spatial dimensions")
    order = sorted(range(len(train)), key=lambda i: labels[i])  # stable within a class
    U = np.column_stack([stats[i] for i in order])
    V = np.column_stack([spats[i] for i in order])
    lab = np.array([labels[i] for i in order])
    ranges = {}
    for i, y in enumerate(lab.tolist()):
        a, _ = ranges.get(y, (i, i))
        ranges[y] = (a, i + 1)
    stat_r = spat_r = None
    if use_pca:
        if U.shape[1] < 2:
            raise InvalidConfig("PCA needs at least 2 training samples")
        fit_U, fit_V = U, V
        extra = list(pca_extra or ())
        if extra:
            fit_U = np.column_stack([U] + [_vector(s, "stat_vector") for s, _ in extra])
            fit_V = np.column_stack([V] + [_vector(v, "spatial_vector") for _, v in extra])
        stat_r = fit_reducer(fit_U, isometric_pca)
        spat_r = fit_reducer(fit_V, isometric_pca)
        U = stat_r.apply(U)
        V = spat_r.apply(V)
    return JointDictionary(U, V, lab, ranges, stat_r, spat_r)


def j3s_loss(q_stat, q_spat, U, V, alpha, gamma, params: J3SParams) -> float:
    th = params.theta
    r1 = q_stat - U @ alpha
    r2 = q_spat - V @ gamma
    return float(
        th * (r1 @ r1)
        + (1.0 - th) * (r2 @ r2)
        + params.lambda1 * (alpha @ alpha)
        + params.lambda2 * (gamma @ gamma)
        + params.lambda3 * np.sum(np.hypot(alpha, gamma))
    )


def _ridge_solve(gram, rhs, ridge, weight, g_diag):
    A = gram + np.diag(ridge + weight * g_diag)
    try:
        c = cho_factor(A, check_finite=True)
    except (LinAlgError, ValueError) as exc:
        raise SingularSystem(f"coding system is not positive definite: {exc}") from exc
    return cho_solve(c, rhs)


def update_alpha(q_stat, U, g_diag, params: J3SParams, gram=None) -> np.ndarray:
    """``(U^T U + (l1/theta) I + (l3/theta) G)^{-1} U^T q_stat`` via Cholesky."""
    gram = U.T @ U if gram is None else gram
    th = params.theta
    return _ridge_solve(gram, U.T @ q_stat, params.lambda1 / th, params.lambda3 / th, g_diag)


def update_gamma(q_spat, V, g_diag, params: J3SParams, gram=None) -> np.ndarray:
    gram = V.T @ V if gram is None else gram
    w = 1.0 - params.theta
    return _ridge_solve(gram, V.T @ q_spat, params.lambda2 / w, params.lambda3 / w, g_diag)


def update_G(alpha, gamma, eps: float = 1e-16) -> np.ndarray:
    """IRLS weights ``1 / (2 ||(alpha_k, gamma_k)|| + eps)``."""
    return 1.0 / (2.0 * np.hypot(alpha, gamma) + eps)


def solve_codes(q_stat, q_spat, U, V, params: J3SParams) -> JointCode:
    """Alternating IRLS on explicit (already reduced) dictionaries."""
    q_stat = np.asarray(q_stat, dtype=float)
    q_spat = np.asarray(q_spat, dtype=float)
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    if U.shape[1] != V.shape[1]:
        raise DimensionMismatch(f"U has {U.shape[1]} atoms but V has {V.shape[1]}")
    if U.shape[0] != q_stat.shape[0] or V.shape[0] != q_spat.shape[0]:
        raise DimensionMismatch("query and dictionary row dimensions differ")
    UtU, VtV = U.T @ U, V.T @ V
    g = np.ones(U.shape[1])
    trace = []
    converged = False
    for _ in range(params.max_iters):
        alpha = update_alpha(q_stat, U, g, params, UtU)
        gamma = update_gamma(q_spat, V, g, params, VtV)
        g = update_G(alpha, gamma, params.eps)
        loss = j3s_loss(q_stat, q_spat, U, V, alpha, gamma, params)
        if not math.isfinite(loss):
            raise NumericalDivergence(f"loss became non-finite at iteration {len(trace) + 1}")
        trace.append(loss)
        if len(trace) > 1 and abs(trace[-1] - trace[-2]) < params.tol:
            converged = True
            break
    return JointCode(alpha, gamma, g, trace, len(trace), converged)


def solve(q_stat, q_spat, dictionary: JointDictionary, params: J3SParams | None = None,
          label=None, projected: bool = False) -> JointCode:
    """Code a query against the whole dictionary, or one class's columns.

    ``projected`` says the query vectors already went through
    ``dictionary.project_query``.
    """
    params = params or J3SParams()
    if not projected:
        q_stat, q_spat = dictionary.project_query(q_stat, q_spat)
    if label is None:
        U, V = dictionary.U, dictionary.V
    else:
        U, V = dictionary.sub_dictionary(label)
    return solve_codes(q_stat, q_spat, U, V, params)
