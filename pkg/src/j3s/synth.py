"""Synthetic image-set datasets with class-specific Gaussians."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import ClassRecord, Manifest, SampleEntry, keyed_rng, manifest_to_json, write_fmx1
from .errors import InvalidConfig

SCALES = ("feature", "intensity")


@dataclass(frozen=True)
class SynthSpec:
    """Per-class Gaussian image sets.

    Class means sit ``separation * sigma`` apart (exactly, when
    ``n_classes <= dim``). Class covariances are ``sigma^2`` times a random
    rotation of a log-normal spectrum whose spread grows with the separation,
    so ``separation == 0`` makes every class the same distribution. Each
    image set is further shifted by ``set_jitter * sigma`` i.i.d. noise to
    give within-class variation between sets.

    ``scale="intensity"`` offsets everything to mid-gray (128) and clamps to
    [0, 255], mimicking pixel data; ``frame_shape`` must then satisfy
    ``h * w == dim``.
    """

    n_classes: int = 4
    dim: int = 10
    set_size: int = 50
    samples_per_class: int = 10
    separation: float = 5.0
    sigma: float = 1.0
    set_jitter: float = 0.5
    scale: str = "feature"
    seed: int = 0

    def __post_init__(self):
        if self.n_classes < 1 or self.dim < 1 or self.samples_per_class < 1:
            raise InvalidConfig("n_classes, dim and samples_per_class must be positive")
        if self.set_size < 2:
            raise InvalidConfig(f"set_size must be at least 2, got {self.set_size}")
        if not self.separation >= 0:
            raise InvalidConfig(f"separation must be non-negative, got {self.separation}")
        if not self.sigma > 0:
            raise InvalidConfig(f"sigma must be positive, got {self.sigma}")
        if self.scale not in SCALES:
            raise InvalidConfig(f"unknown scale {self.scale!r}")


def class_models(spec: SynthSpec):
    """(means, covariance factors) for every class."""
    rng = keyed_rng(spec.seed, "class-models")
    d, n = spec.dim, spec.n_classes
    if n <= d:
        dirs, _ = np.linalg.qr(rng.standard_normal((d, n)))
    else:
        dirs = rng.standard_normal((d, n))
        dirs /= np.linalg.norm(dirs, axis=0)
    means = dirs.T * (spec.separation * spec.sigma / math.sqrt(2.0))
    spread = min(0.5, 0.1 * spec.separation)
    factors = []
    for _ in range(n):
        R, _ = np.linalg.qr(rng.standard_normal((d, d)))
        z = rng.standard_normal(d)
        s = np.exp(spread * (z - z.mean()))
        factors.append(R * (spec.sigma * np.sqrt(s)))
    return means, factors


def sample_sets(spec: SynthSpec):
    """Yield ``(class_index, sample_index, d x m matrix)`` deterministically."""
    means, factors = class_models(spec)
    for c in range(spec.n_classes):
        for k in range(spec.samples_per_class):
            rng = keyed_rng(spec.seed, "sample", c, k)
            center = means[c] + spec.set_jitter * spec.sigma * rng.standard_normal(spec.dim)
            X = center[:, None] + factors[c] @ rng.standard_normal((spec.dim, spec.set_size))
            if spec.scale == "intensity":
                X = np.clip(X + 128.0, 0.0, 255.0)
            yield c, k, X


def generate_synthetic(out_dir, spec: SynthSpec | None = None) -> Manifest:
    """Write FMX1 sample files and ``manifest.json`` under ``out_dir``."""
    spec = spec or SynthSpec()
    out = Path(out_dir)
    (out / "samples").mkdir(parents=True, exist_ok=True)
    per_class = {c: [] for c in range(spec.n_classes)}
    for c, k, X in sample_sets(spec):
        sid = f"c{c}_s{k:03d}"
        path = out / "samples" / f"{sid}.fmx"
        write_fmx1(path, X)
        per_class[c].append(SampleEntry(sid, path, "image_set", c))
    manifest = Manifest(
        tuple(ClassRecord(c, f"class{c}", tuple(v)) for c, v in per_class.items()),
        out,
        (0.0, 255.0) if spec.scale == "intensity" else None,
    )
    (out / "manifest.json").write_text(json.dumps(manifest_to_json(manifest), indent=2) + "\n")
    return manifest
