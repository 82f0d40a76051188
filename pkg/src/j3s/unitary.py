"""Patch-based unitary dictionary learning.

A unitary synthesis dictionary ``D`` and the analysis transform ``W = D^T``
give identical fitting errors (``||x - D g|| == ||W x - g||`` when
``D^T D = I``), so ``D`` is learned through the transform problem, which
alternates two exact steps: hard thresholding for the codes and an
orthogonal Procrustes solve for ``W``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dct

from .errors import InvalidConfig, PatchTooLarge

log = logging.getLogger(__name__)

LAYOUTS = ("auto", "matrix", "mosaic", "per_channel")


@dataclass(frozen=True)
class PatchConfig:
    """Patch geometry and transform-learning settings.

    ``layout`` selects how a d x m sample becomes 2-D input:
    ``matrix`` uses the d x m matrix itself, ``mosaic`` reshapes every
    column to a ``frame_shape`` frame and tiles the frames into one image,
    ``per_channel`` extracts patches from each reshaped column separately.
    ``auto`` picks ``mosaic`` for image sets with a known (or square) frame
    shape and ``matrix`` otherwise.
    """

    patch_h: int = 8
    patch_w: int = 8
    stride: int = 4
    sparsity_fraction: float = 0.1
    iterations: int = 50
    init: str = "dct"
    layout: str = "auto"
    frame_shape: tuple[int, int] | None = None
    tol: float = 1e-8

    def __post_init__(self):
        if self.patch_h < 1 or self.patch_w < 1:
            raise InvalidConfig(f"patch size must be positive, got {self.patch_h}x{self.patch_w}")
        if self.stride < 1:
            raise InvalidConfig(f"stride must be positive, got {self.stride}")
        if not 0.0 < self.sparsity_fraction <= 1.0:
            raise InvalidConfig(f"sparsity_fraction must lie in (0, 1], got {self.sparsity_fraction}")
        if self.iterations < 0:
            raise InvalidConfig(f"iterations must be non-negative, got {self.iterations}")
        if self.init not in ("dct", "identity"):
            raise InvalidConfig(f"unknown init {self.init!r}")
        if self.layout not in LAYOUTS:
            raise InvalidConfig(f"unknown layout {self.layout!r}; expected one of {LAYOUTS}")

    @property
    def p(self) -> int:
        return self.patch_h * self.patch_w

    @property
    def sparsity(self) -> int:
        return max(1, math.ceil(self.sparsity_fraction * self.p - 1e-9))


@dataclass(frozen=True)
class UnitaryDictionary:
    D: np.ndarray
    final_objective: float
    objective_trace: list = field(default_factory=list, repr=False)

    @property
    def spatial_vector(self) -> np.ndarray:
        return spatial_vector(self.D)


def extract_patches(image, cfg: PatchConfig) -> np.ndarray:
    """All ``patch_h x patch_w`` windows of ``image`` at the configured stride.

    Returns a p x N matrix; each column is a patch flattened column-major,
    windows visited row-major over their top-left corners.
    """
    image = np.asarray(image, dtype=float)
    H, Wd = image.shape
    ph, pw, s = cfg.patch_h, cfg.patch_w, cfg.stride
    if H < ph or Wd < pw:
        raise PatchTooLarge(f"{ph}x{pw} patch does not fit a {H}x{Wd} input")
    windows = np.lib.stride_tricks.sliding_window_view(image, (ph, pw))[::s, ::s]
    nr, nc = windows.shape[:2]
    # (nr, nc, ph, pw) -> columns ordered row-major over origins, entries column-major
    return windows.transpose(3, 2, 0, 1).reshape(ph * pw, nr * nc)


def hard_threshold(v, s: int) -> np.ndarray:
    """Keep the ``s`` largest-magnitude entries of ``v`` (lower index wins ties)."""
    v = np.asarray(v, dtype=float)
    if not 1 <= s <= v.shape[0]:
        raise InvalidConfig(f"sparsity {s} out of range for length {v.shape[0]}")
    return hard_threshold_columns(v[:, None], s)[:, 0]


def hard_threshold_columns(Z: np.ndarray, s: int) -> np.ndarray:
    """Column-wise :func:`hard_threshold` of a p x N matrix."""
    if s >= Z.shape[0]:
        return Z.copy()
    order = np.argsort(-np.abs(Z), axis=0, kind="stable")[:s]
    out = np.zeros_like(Z)
    cols = np.arange(Z.shape[1])
    out[order, cols] = Z[order, cols]
    return out


def transform_update(patches, codes) -> np.ndarray:
    """Unitary ``W`` minimizing ``||W @ patches - codes||_F``.

    With ``svd(patches @ codes.T) = S diag(sigma) G^T`` the minimizer is
    ``W = G S^T``. A zero cross-product leaves every unitary ``W`` optimal;
    identity is returned in that case.
    """
    P = np.asarray(patches, dtype=float)
    Gm = np.asarray(codes, dtype=float)
    if P.shape != Gm.shape:
        raise InvalidConfig(f"patches {P.shape} and codes {Gm.shape} differ in shape")
    K = P @ Gm.T
    if not np.any(K):
        log.warning("transform update: zero cross-product, returning identity")
        return np.eye(P.shape[0])
    S, _, Gt = np.linalg.svd(K)
    return Gt.T @ S.T


def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II analysis matrix (``C @ x == dct(x, norm='ortho')``)."""
    return dct(np.eye(n), norm="ortho", axis=0)


def initial_transform(cfg: PatchConfig) -> np.ndarray:
    if cfg.init == "identity":
        return np.eye(cfg.p)
    # separable 2-D DCT acting on column-major patch vectors
    return np.kron(dct_matrix(cfg.patch_w), dct_matrix(cfg.patch_h))


def sparsification_error(W, patches, s) -> float:
    Z = W @ patches
    R = Z - hard_threshold_columns(Z, s)
    return float(np.sum(R * R))


def learn_transform(patches, cfg: PatchConfig, callback=None) -> UnitaryDictionary:
    """Learn a unitary dictionary from a p x N patch matrix.

    ``callback(iteration, W, objective)``, if given, runs after every
    transform update.
    """
    patches = np.asarray(patches, dtype=float)
    if patches.shape[0] != cfg.p:
        raise InvalidConfig(f"patch dimension {patches.shape[0]} != {cfg.p}")
    s = cfg.sparsity
    W = initial_transform(cfg)
    obj = sparsification_error(W, patches, s)
    trace = [obj]
    for it in range(cfg.iterations):
        codes = hard_threshold_columns(W @ patches, s)
        W = transform_update(patches, codes)
        new_obj = sparsification_error(W, patches, s)
        trace.append(new_obj)
        if callback is not None:
            callback(it + 1, W, new_obj)
        done = abs(obj - new_obj) < cfg.tol
        obj = new_obj
        if done:
            break
    return UnitaryDictionary(D=W.T.copy(), final_objective=obj, objective_trace=trace)


def spatial_input(X, cfg: PatchConfig) -> list:
    """2-D arrays that patches are drawn from for one sample."""
    data = X.data if hasattr(X, "data") else np.asarray(X, dtype=float)
    kind = getattr(X, "kind", "image_set")
    layout = cfg.layout
    frame = cfg.frame_shape
    d = data.shape[0]
    if frame is None and layout in ("auto", "mosaic", "per_channel"):
        r = math.isqrt(d)
        if r * r == d and r >= max(cfg.patch_h, cfg.patch_w):
            frame = (r, r)
    if layout == "auto":
        layout = "mosaic" if (kind == "image_set" and frame is not None) else "matrix"
    if layout == "matrix":
        return [data]
    if frame is None or frame[0] * frame[1] != d:
        raise InvalidConfig(f"layout {layout!r} needs a frame shape with h*w == {d}, got {frame}")
    frames = [data[:, j].reshape(frame) for j in range(data.shape[1])]
    if layout == "per_channel":
        return frames
    return [tile_frames(frames)]


def tile_frames(frames) -> np.ndarray:
    """Tile equally-sized frames row-major into a near-square mosaic; unused
    cells are zero."""
    m = len(frames)
    h, w = frames[0].shape
    cols = math.ceil(math.sqrt(m))
    rows = math.ceil(m / cols)
    mosaic = np.zeros((rows * h, cols * w))
    for k, f in enumerate(frames):
        r, c = divmod(k, cols)
        mosaic[r * h:(r + 1) * h, c * w:(c + 1) * w] = f
    return mosaic


def learn_unitary(X, cfg: PatchConfig | None = None) -> UnitaryDictionary:
    """Learn the spatial model of one sample (FeatureMatrix or 2-D array)."""
    cfg = cfg or PatchConfig()
    patches = np.hstack([extract_patches(img, cfg) for img in spatial_input(X, cfg)])
    return learn_transform(patches, cfg)


def spatial_vector(D) -> np.ndarray:
    """Column-major flattening of ``D``."""
    return np.asarray(D, dtype=float).ravel(order="F")
