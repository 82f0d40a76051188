"""Command-line entry point: ``j3s benchmark | ablate | synth``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .coder import J3SParams
from .data import NoiseSpec, SplitSpec
from .errors import ConfigError, J3SError
from .gaussian import GaussianConfig
from .harness import ABLATION_PARAMS, ExperimentConfig, run_ablation, run_benchmark, write_ablation, write_run
from .presets import PRESETS, preset_command
from .synth import SCALES, SynthSpec, generate_synthetic
from .unitary import LAYOUTS, PatchConfig

log = logging.getLogger("j3s")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _shape(text: str) -> tuple:
    parts = text.lower().split("x")
    try:
        dims = tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW or N, got {text!r}")
    if len(dims) == 1:
        dims = dims * 2
    if len(dims) != 2 or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"expected HxW or N, got {text!r}")
    return dims


def _gallery(text: str):
    if text == "half":
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected a positive integer or "half", got {text!r}')


def _range(text: str):
    if text.lower() == "none":
        return None
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LOW,HIGH or none, got {text!r}")
    return lo, hi


def _add_experiment_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest", type=Path, required=True, help="dataset manifest (JSON)")
    p.add_argument("--out", type=Path, required=True, help="output directory for CSV reports")

    g = p.add_argument_group("coder")
    g.add_argument("--theta", type=float, default=0.6, help="statistical/spatial weight (use 0.1 for tiny galleries)")
    g.add_argument("--lambda1", type=float, default=1e-3)
    g.add_argument("--lambda2", type=float, default=1e-3)
    g.add_argument("--lambda3", type=float, default=1e-3)
    g.add_argument("--max-iters", type=int, default=50)
    g.add_argument("--tol", type=float, default=1e-6)
    g.add_argument("--coding", choices=("per-class", "global"), default="per-class")
    g.add_argument("--pca", action=argparse.BooleanOptionalAction, default=False,
                   help="reduce dictionary rows with PCA fitted on the gallery")
    g.add_argument("--pca-mode", choices=("isometric", "centered"), default="isometric",
                   help="isometric keeps a mean-offset axis so in-span coding is unchanged")
    g.add_argument("--pca-fit", choices=("gallery", "all"), default="gallery",
                   help="fit PCA on gallery samples only, or on gallery and probes")

    g = p.add_argument_group("statistical model")
    g.add_argument("--cov-alpha", type=float, default=0.5, help="robust covariance shrinkage in (0, 1)")
    g.add_argument("--beta", type=float, default=1.0, help="mean weight in the SPD embedding")
    g.add_argument("--hellinger", action=argparse.BooleanOptionalAction, default=True,
                   help="entrywise square-root feature map (needs non-negative features)")

    g = p.add_argument_group("spatial model")
    g.add_argument("--patch", type=_shape, default=(8, 8), help="patch size HxW (default 8x8)")
    g.add_argument("--stride", type=int, default=4)
    g.add_argument("--sparsity", type=float, default=0.1, help="fraction of kept transform coefficients")
    g.add_argument("--transform-iters", type=int, default=50)
    g.add_argument("--layout", choices=LAYOUTS, default="auto")
    g.add_argument("--frame-shape", type=_shape, default=None, help="HxW of one image column")

    g = p.add_argument_group("protocol")
    g.add_argument("--gallery-per-class", type=_gallery, default="half")
    g.add_argument("--few-shot-k", type=int, default=None)
    g.add_argument("--noise-sigma", type=float, default=0.0)
    g.add_argument("--noise-range", type=_range, default=None,
                   help="LOW,HIGH clamp after noise; defaults to the manifest's value_range")
    g.add_argument("--repeats", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--trace-losses", action="store_true",
                   help="write loss traces for the first probe of each class")
    g.add_argument("--workers", type=int, default=1)


def _experiment(args) -> ExperimentConfig:
    noise = None
    if args.noise_sigma or args.noise_range is not None:
        noise = NoiseSpec(sigma=args.noise_sigma, seed=args.seed, value_range=args.noise_range)
    return ExperimentConfig(
        manifest=args.manifest,
        params=J3SParams(theta=args.theta, lambda1=args.lambda1, lambda2=args.lambda2,
                         lambda3=args.lambda3, max_iters=args.max_iters, tol=args.tol),
        gaussian=GaussianConfig(cov_shrinkage=args.cov_alpha, beta=args.beta, use_hellinger=args.hellinger),
        patch=PatchConfig(patch_h=args.patch[0], patch_w=args.patch[1], stride=args.stride,
                          sparsity_fraction=args.sparsity, iterations=args.transform_iters,
                          layout=args.layout, frame_shape=args.frame_shape),
        split=SplitSpec(gallery_per_class=args.gallery_per_class, seed=args.seed, few_shot_k=args.few_shot_k),
        noise=noise,
        use_pca=args.pca,
        isometric_pca=args.pca_mode == "isometric",
        pca_fit=args.pca_fit,
        mode=args.coding.replace("-", "_"),
        repeats=args.repeats,
        trace_losses=args.trace_losses,
        workers=args.workers,
    )


def _cmd_benchmark(args) -> int:
    report = run_benchmark(_experiment(args))
    write_run(report, args.out)
    print(f"accuracy mean {report.mean:.4f} std {report.std:.4f} over {len(report.accuracies)} repeat(s)")
    if report.failures:
        return report.failures[0]["exit_code"]
    return 0


def _cmd_ablate(args) -> int:
    cfg = _experiment(args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("--values is empty")
    reports = run_ablation(cfg, args.param, values)
    write_ablation(args.param, reports, args.out)
    for rep in reports:
        print(f"{args.param}={rep.label}: accuracy mean {rep.mean:.4f} std {rep.std:.4f}")
    for rep in reports:
        if rep.failures:
            return rep.failures[0]["exit_code"]
    return 0


def _cmd_synth(args) -> int:
    if args.preset:
        spec = PRESETS[args.preset].synth
        manifest = generate_synthetic(args.out, spec)
        print(f"wrote {len(manifest.samples)} samples to {args.out / 'manifest.json'}")
        print("run: j3s " + " ".join(preset_command(args.preset, args.out, args.out.parent / "results")))
        return 0
    spec = SynthSpec(n_classes=args.classes, dim=args.dim, set_size=args.set_size,
                     samples_per_class=args.samples_per_class, separation=args.separation,
                     sigma=args.sigma, set_jitter=args.set_jitter, scale=args.scale, seed=args.seed)
    manifest = generate_synthetic(args.out, spec)
    print(f"wrote {len(manifest.samples)} samples to {args.out / 'manifest.json'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="j3s", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("benchmark", help="run seeded gallery/probe classification repeats")
    _add_experiment_args(p)
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("ablate", help="sweep one parameter, one benchmark per value")
    _add_experiment_args(p)
    p.add_argument("--param", choices=ABLATION_PARAMS, required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("synth", help="generate a synthetic image-set dataset")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--dim", type=int, default=10)
    p.add_argument("--set-size", type=int, default=50)
    p.add_argument("--samples-per-class", type=int, default=10)
    p.add_argument("--separation", type=float, default=5.0, help="class mean distance in units of sigma")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--set-jitter", type=float, default=0.5)
    p.add_argument("--scale", choices=SCALES, default="feature")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--preset", choices=sorted(PRESETS),
                   help="generate a bundled dataset (other generator flags are ignored)")
    p.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except J3SError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error (I/O): {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
