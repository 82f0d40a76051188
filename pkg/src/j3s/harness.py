"""Batch experiments: seeded repeats over a manifest, CSV reports."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classifier import PredictionReport, predict
from .coder import J3SParams, assemble_dictionaries
from .data import NoiseSpec, SplitSpec, add_gaussian_noise, gallery_probe_split, load_feature_matrix, load_manifest
from .errors import InvalidConfig, J3SError
from .gaussian import GaussianConfig, build_descriptor
from .unitary import PatchConfig, learn_unitary

log = logging.getLogger(__name__)

ABLATION_PARAMS = ("theta", "lambda1", "lambda2", "lambda3", "sparsity_fraction", "use_pca", "noise_sigma")


@dataclass(frozen=True)
class ExperimentConfig:
    manifest: Path
    params: J3SParams = J3SParams()
    gaussian: GaussianConfig = GaussianConfig()
    patch: PatchConfig = PatchConfig()
    split: SplitSpec = SplitSpec()
    noise: NoiseSpec | None = None
    use_pca: bool = False
    isometric_pca: bool = True
    pca_fit: str = "gallery"  # "gallery" or "all" (gallery plus probes)
    mode: str = "per_class"
    repeats: int = 1
    trace_losses: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.repeats < 1:
            raise InvalidConfig(f"repeats must be at least 1, got {self.repeats}")
        if self.workers < 1:
            raise InvalidConfig(f"workers must be at least 1, got {self.workers}")
        if self.pca_fit not in ("gallery", "all"):
            raise InvalidConfig(f'pca_fit must be "gallery" or "all", got {self.pca_fit!r}')


@dataclass
class RunReport:
    classes: list
    accuracies: list  # one per repeat; nan for a failed repeat
    predictions: list  # (repeat, PredictionReport)
    traces: list = field(default_factory=list)  # (repeat, sample_id, coded_class, iteration, loss)
    timings: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)  # structured diagnostics
    label: str = ""

    @property
    def mean(self) -> float:
        ok = [a for a in self.accuracies if not math.isnan(a)]
        return float(np.mean(ok)) if ok else math.nan

    @property
    def std(self) -> float:
        ok = [a for a in self.accuracies if not math.isnan(a)]
        return float(np.std(ok)) if ok else math.nan


@dataclass(frozen=True)
class SampleFeatures:
    label: int
    stat_vector: np.ndarray
    spatial_vector: np.ndarray


class FeatureStore:
    """Per-sample features, computed once per (Gaussian, patch, noise) setting.

    Features of a sample do not depend on the split, so repeats and sweeps
    over coder parameters reuse them.
    """

    def __init__(self, manifest, workers: int = 1):
        self.manifest = manifest
        self.workers = workers
        self._raw = None
        self._cache = {}

    def raw(self):
        if self._raw is None:
            self._raw = {
                s.sample_id: load_feature_matrix(s.path, label=s.label, sample_id=s.sample_id, kind=s.kind)
                for s in self.manifest.samples
            }
        return self._raw

    def features(self, gcfg: GaussianConfig, pcfg: PatchConfig, noise: NoiseSpec | None) -> dict:
        key = (gcfg, pcfg, noise)
        if key not in self._cache:
            raw = self.raw()

            def one(sid):
                X = raw[sid]
                if noise is not None:
                    X = add_gaussian_noise(X, noise)
                desc = build_descriptor(X, gcfg)
                ud = learn_unitary(X, pcfg)
                return SampleFeatures(X.label, desc.stat_vector, ud.spatial_vector)

            ids = list(raw)
            self._cache[key] = dict(zip(ids, _pmap(one, ids, self.workers)))
        return self._cache[key]


def _pmap(fn, items, workers):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _effective_noise(cfg: ExperimentConfig, manifest):
    noise = cfg.noise
    if noise is None or noise.sigma == 0:
        return None
    if noise.value_range is None and manifest.value_range is not None:
        noise = dataclasses.replace(noise, value_range=manifest.value_range)
    return noise


def run_benchmark(cfg: ExperimentConfig, store: FeatureStore | None = None) -> RunReport:
    """Run ``cfg.repeats`` seeded gallery/probe repeats.

    Repeat ``r`` splits with seed ``split.seed + r``. A library error inside
    a repeat is recorded in ``failures`` and that repeat's accuracy is nan.
    """
    timings = {}
    t0 = time.perf_counter()
    manifest = store.manifest if store is not None else load_manifest(cfg.manifest)
    store = store or FeatureStore(manifest, cfg.workers)
    store.raw()
    timings["load"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    feats = store.features(cfg.gaussian, cfg.patch, _effective_noise(cfg, manifest))
    timings["features"] = time.perf_counter() - t0

    report = RunReport(classes=manifest.class_ids, accuracies=[], predictions=[], timings=timings)
    timings["dictionary"] = timings["classify"] = 0.0
    for r in range(cfg.repeats):
        try:
            preds, traces = _run_repeat(cfg, manifest, feats, r, timings)
        except J3SError as exc:
            diag = {"repeat": r, "error": type(exc).__name__, "exit_code": exc.exit_code, "message": str(exc)}
            log.error("repeat %d failed: %s", r, json.dumps(diag))
            report.failures.append(diag)
            report.accuracies.append(math.nan)
            continue
        correct = sum(p.predicted == p.true_label for p in preds)
        report.accuracies.append(correct / len(preds))
        report.predictions.extend((r, p) for p in preds)
        report.traces.extend(traces)
    return report


def _run_repeat(cfg, manifest, feats, r, timings):
    split = dataclasses.replace(cfg.split, seed=(cfg.split.seed + r) % 2**64)
    gallery, probes = gallery_probe_split(manifest, split)

    t0 = time.perf_counter()
    dictionary = assemble_dictionaries(
        [(feats[s.sample_id].stat_vector, feats[s.sample_id].spatial_vector, s.label) for s in gallery],
        use_pca=cfg.use_pca,
        isometric_pca=cfg.isometric_pca,
        pca_extra=[(feats[s.sample_id].stat_vector, feats[s.sample_id].spatial_vector) for s in probes]
        if cfg.pca_fit == "all" else None,
    )
    timings["dictionary"] += time.perf_counter() - t0

    traced = set()
    if cfg.trace_losses:
        seen = set()
        for s in probes:
            if s.label not in seen:
                seen.add(s.label)
                traced.add(s.sample_id)

    def classify(s):
        f = feats[s.sample_id]
        return predict(f.stat_vector, f.spatial_vector, dictionary, cfg.params, mode=cfg.mode,
                       sample_id=s.sample_id, true_label=s.label, keep_traces=s.sample_id in traced)

    t0 = time.perf_counter()
    preds = _pmap(classify, probes, cfg.workers)
    timings["classify"] += time.perf_counter() - t0

    traces = []
    for p in preds:
        for coded, trace in p.loss_traces.items():
            traces.extend((r, p.sample_id, coded, i + 1, loss) for i, loss in enumerate(trace))
    return preds, traces


def _with_value(cfg: ExperimentConfig, param: str, value) -> ExperimentConfig:
    if param in ("theta", "lambda1", "lambda2", "lambda3"):
        return dataclasses.replace(cfg, params=dataclasses.replace(cfg.params, **{param: float(value)}))
    if param == "sparsity_fraction":
        return dataclasses.replace(cfg, patch=dataclasses.replace(cfg.patch, sparsity_fraction=float(value)))
    if param == "use_pca":
        return dataclasses.replace(cfg, use_pca=parse_bool(value))
    if param == "noise_sigma":
        base = cfg.noise or NoiseSpec(seed=cfg.split.seed)
        return dataclasses.replace(cfg, noise=dataclasses.replace(base, sigma=float(value)))
    raise InvalidConfig(f"unknown ablation parameter {param!r}; expected one of {ABLATION_PARAMS}")


def parse_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise InvalidConfig(f"not a boolean: {value!r}")


def run_ablation(cfg: ExperimentConfig, param: str, values) -> list:
    """One full benchmark per value of ``param``; features are shared where possible."""
    if param not in ABLATION_PARAMS:
        raise InvalidConfig(f"unknown ablation parameter {param!r}; expected one of {ABLATION_PARAMS}")
    configs = [_with_value(cfg, param, v) for v in values]  # validate all before running
    store = FeatureStore(load_manifest(cfg.manifest), cfg.workers)
    reports = []
    for v, c in zip(values, configs):
        rep = run_benchmark(c, store)
        rep.label = str(v)
        log.info("%s=%s: mean accuracy %.4f", param, v, rep.mean)
        reports.append(rep)
    return reports


# -- CSV output ---------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_predictions_csv(report: RunReport, path) -> None:
    classes = report.classes
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["repeat", "sample_id", "true_label", "predicted"]
                   + [f"e_class_{i}" for i in range(len(classes))] + ["iterations"])
        for r, p in report.predictions:
            w.writerow([r, p.sample_id, p.true_label, p.predicted]
                       + [_fmt(p.class_errors[c]) for c in classes]
                       + [sum(p.per_class_iterations.values())])


def write_summary_csv(report: RunReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["repeat", "accuracy"])
        for r, a in enumerate(report.accuracies):
            w.writerow([r, _fmt(a)])
        w.writerow(["mean", _fmt(report.mean)])
        w.writerow(["std", _fmt(report.std)])


def write_traces_csv(report: RunReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["repeat", "sample_id", "coded_class", "iteration", "loss"])
        for row in report.traces:
            w.writerow([_fmt(x) for x in row])


def write_run(report: RunReport, out_dir) -> None:
    """``report.csv``, ``summary.csv``, ``traces.csv`` (when traced) and
    ``timings.json``. Only the timings differ between identical runs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_predictions_csv(report, out / "report.csv")
    write_summary_csv(report, out / "summary.csv")
    if report.traces:
        write_traces_csv(report, out / "traces.csv")
    (out / "timings.json").write_text(json.dumps(report.timings, indent=2) + "\n")
    if report.failures:
        (out / "failures.json").write_text(json.dumps(report.failures, indent=2) + "\n")


def write_ablation(param: str, reports, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "ablation.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["parameter", "value", "repeat", "accuracy"])
        for rep in reports:
            for r, a in enumerate(rep.accuracies):
                w.writerow([param, rep.label, r, _fmt(a)])
    for rep in reports:
        write_run(rep, out / f"{param}={rep.label}")
