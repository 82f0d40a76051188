"""Feature files, dataset manifests, seeded splits and noise injection.

FMX1 layout (little-endian): ``b"FMX1"``, uint32 d, uint32 m, then d*m
float64 values in column-major order.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyClass, FormatError, InvalidConfig, InvalidInput, InvalidValue
from .gaussian import FeatureMatrix

MAGIC = b"FMX1"
_HEADER = struct.Struct("<4sII")
KINDS = ("image_set", "feature_map")


# -- keyed random streams ---------------------------------------------------

def _key_words(key) -> list:
    if isinstance(key, (bool, np.bool_)):
        key = int(key)
    if isinstance(key, (int, np.integer)):
        key = int(key)
        if key < 0:
            key = (1 << 64) + key
        return [key & 0xFFFFFFFF, (key >> 32) & 0xFFFFFFFF]
    digest = hashlib.sha256(str(key).encode("utf-8")).digest()
    return list(struct.unpack("<8I", digest))


def keyed_rng(seed: int, *keys) -> np.random.Generator:
    """Generator whose stream depends only on ``seed`` and ``keys``.

    String keys are hashed with SHA-256, so streams are stable across
    processes and platforms.
    """
    words = _key_words(seed)
    for k in keys:
        words.extend(_key_words(k))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))


# -- feature files ----------------------------------------------------------

def write_fmx1(path, matrix) -> None:
    A = np.asarray(matrix, dtype="<f8")
    if A.ndim != 2:
        raise InvalidValue(f"FMX1 stores 2-D matrices, got shape {A.shape}")
    d, m = A.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, d, m))
        fh.write(A.tobytes(order="F"))


def read_fmx1(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated FMX1 header", offset=len(raw))
    magic, d, m = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}", offset=0)
    if d == 0 or m == 0:
        raise FormatError(f"{path}: empty shape {d}x{m}", offset=4)
    expected = _HEADER.size + 8 * d * m
    if len(raw) != expected:
        what = "truncated" if len(raw) < expected else "trailing bytes in"
        raise FormatError(f"{path}: {what} FMX1 payload, expected {expected} bytes for {d}x{m}",
                          offset=min(len(raw), expected))
    A = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape((d, m), order="F")
    bad = np.argwhere(~np.isfinite(A))
    if bad.size:
        i, j = bad[0]
        raise InvalidValue(f"{path}: non-finite value at ({i}, {j})")
    return A.astype(float)


def read_csv_matrix(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
            if not all(math.isfinite(v) for v in vals):
                raise InvalidValue(f"{path}:{lineno}: non-finite value")
            rows.append(vals)
    if not rows:
        raise FormatError(f"{path}: empty CSV")
    if len({len(r) for r in rows}) != 1:
        raise FormatError(f"{path}: ragged CSV rows")
    return np.array(rows, dtype=float)


def load_feature_matrix(path, label=None, sample_id: str | None = None,
                        kind: str = "image_set") -> FeatureMatrix:
    """Load an FMX1 (``.fmx``/any binary with the magic) or CSV file."""
    path = Path(path)
    if not path.is_file():
        raise InvalidInput(f"feature file not found: {path}")
    with open(path, "rb") as fh:
        head = fh.read(4)
    data = read_fmx1(path) if head == MAGIC or path.suffix.lower() in (".fmx", ".fmx1") else read_csv_matrix(path)
    return FeatureMatrix(data, label=label, sample_id=sample_id or path.stem, kind=kind)


# -- manifests --------------------------------------------------------------

@dataclass(frozen=True)
class SampleEntry:
    sample_id: str
    path: Path
    kind: str = "image_set"
    label: int | None = None


@dataclass(frozen=True)
class ClassRecord:
    id: int
    name: str
    samples: tuple


@dataclass(frozen=True)
class Manifest:
    classes: tuple  # of ClassRecord, sorted by id
    root: Path = field(default=Path("."), compare=False)
    value_range: tuple | None = None  # optional clamp range for noise, e.g. pixel data

    @property
    def samples(self) -> list:
        return [s for c in self.classes for s in c.samples]

    @property
    def class_ids(self) -> list:
        return [c.id for c in self.classes]


def parse_manifest(doc: dict, root=".", check_paths: bool = True) -> Manifest:
    root = Path(root)
    if not isinstance(doc, dict) or not isinstance(doc.get("classes"), list):
        raise FormatError('manifest must be an object with a "classes" list')
    classes, seen_ids, seen_samples = [], set(), set()
    for c in doc["classes"]:
        try:
            cid, name, samples = int(c["id"]), str(c.get("name", c["id"])), c["samples"]
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad class record {c!r}: {exc}") from exc
        if cid in seen_ids:
            raise FormatError(f"duplicate class id {cid}")
        seen_ids.add(cid)
        entries = []
        for s in samples:
            try:
                sid, spath, kind = str(s["id"]), str(s["path"]), s.get("kind", "image_set")
            except (KeyError, TypeError) as exc:
                raise FormatError(f"bad sample record {s!r} in class {cid}: {exc}") from exc
            if kind not in KINDS:
                raise FormatError(f"sample {sid!r}: unknown kind {kind!r}")
            if sid in seen_samples:
                raise FormatError(f"duplicate sample id {sid!r}")
            seen_samples.add(sid)
            p = Path(spath)
            p = p if p.is_absolute() else root / p
            if check_paths and not p.is_file():
                raise InvalidInput(f"sample {sid!r}: file not found: {p}")
            entries.append(SampleEntry(sid, p, kind, cid))
        classes.append(ClassRecord(cid, name, tuple(entries)))
    classes.sort(key=lambda c: c.id)
    vr = doc.get("value_range")
    if vr is not None:
        try:
            lo, hi = (float(v) for v in vr)
        except (TypeError, ValueError) as exc:
            raise FormatError(f"bad value_range {vr!r}") from exc
        vr = (lo, hi)
    return Manifest(tuple(classes), root, vr)


def load_manifest(path, check_paths: bool = True) -> Manifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise InvalidInput(f"manifest not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc.msg}", offset=exc.pos) from exc
    return parse_manifest(doc, path.parent, check_paths)


def manifest_to_json(manifest: Manifest) -> dict:
    def rel(p):
        try:
            return Path(p).relative_to(manifest.root).as_posix()
        except ValueError:
            return str(p)

    doc = {
        "classes": [
            {
                "id": c.id,
                "name": c.name,
                "samples": [{"id": s.sample_id, "path": rel(s.path), "kind": s.kind} for s in c.samples],
            }
            for c in manifest.classes
        ]
    }
    if manifest.value_range is not None:
        doc["value_range"] = list(manifest.value_range)
    return doc


def write_manifest(manifest: Manifest, path) -> None:
    Path(path).write_text(json.dumps(manifest_to_json(manifest), indent=2) + "\n")


# -- splits -----------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    gallery_per_class: int | str = "half"
    seed: int = 0
    few_shot_k: int | None = None

    def __post_init__(self):
        g = self.gallery_per_class
        if g != "half" and not (isinstance(g, int) and g >= 1):
            raise InvalidConfig(f'gallery_per_class must be a positive integer or "half", got {g!r}')
        if self.few_shot_k is not None and self.few_shot_k < 1:
            raise InvalidConfig(f"few_shot_k must be positive, got {self.few_shot_k}")
        if not 0 <= self.seed < 2**64:
            raise InvalidConfig(f"seed must be a 64-bit unsigned integer, got {self.seed}")


def gallery_probe_split(manifest: Manifest, spec: SplitSpec):
    """Per-class seeded shuffle into disjoint gallery and probe lists.

    ``"half"`` puts ``ceil(n / 2)`` samples of each class in the gallery.
    Each class is shuffled with its own stream keyed by ``(seed, class id)``.
    """
    gallery, probe = [], []
    for c in manifest.classes:
        n = len(c.samples)
        if n < 2:
            raise EmptyClass(f"class {c.id} has {n} sample(s); a split needs at least 2")
        g = math.ceil(n / 2) if spec.gallery_per_class == "half" else spec.gallery_per_class
        if g >= n:
            raise EmptyClass(f"class {c.id}: gallery_per_class={g} leaves no probes out of {n}")
        perm = keyed_rng(spec.seed, "split", c.id).permutation(n)
        gallery.extend(c.samples[i] for i in sorted(perm[:g]))
        probe.extend(c.samples[i] for i in sorted(perm[g:]))
    if spec.few_shot_k is not None:
        gallery = few_shot_subsample(gallery, spec.few_shot_k, spec.seed)
    return gallery, probe


def few_shot_subsample(gallery, k: int, seed: int) -> list:
    """Keep exactly ``k`` gallery samples per class, preserving order."""
    by_class = {}
    for s in gallery:
        by_class.setdefault(s.label, []).append(s)
    keep = set()
    for label, items in by_class.items():
        if k > len(items):
            raise InvalidConfig(f"few-shot k={k} exceeds gallery size {len(items)} of class {label}")
        idx = keyed_rng(seed, "few-shot", label).choice(len(items), size=k, replace=False)
        keep.update(items[i].sample_id for i in idx)
    return [s for s in gallery if s.sample_id in keep]


# -- noise ------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseSpec:
    sigma: float = 0.0
    seed: int = 0
    value_range: tuple | None = None

    def __post_init__(self):
        if not self.sigma >= 0:
            raise InvalidConfig(f"noise sigma must be non-negative, got {self.sigma}")


PIXEL_RANGE = (0.0, 255.0)


def add_gaussian_noise(X: FeatureMatrix, spec: NoiseSpec) -> FeatureMatrix:
    """Add i.i.d. N(0, sigma^2) noise drawn from a stream keyed by
    ``(seed, sample_id)``, then clamp to ``value_range`` if one is given."""
    if spec.sigma == 0:
        return X
    rng = keyed_rng(spec.seed, "noise", X.sample_id)
    noisy = X.data + rng.normal(0.0, spec.sigma, size=X.data.shape)
    if spec.value_range is not None:
        lo, hi = spec.value_range
        noisy = np.clip(noisy, lo, hi)
    return X.with_data(noisy)
