"""Bundled experiment presets: a synthetic dataset plus matching benchmark flags."""

from __future__ import annotations

from dataclasses import dataclass

from .synth import SynthSpec


@dataclass(frozen=True)
class Preset:
    synth: SynthSpec
    benchmark_args: tuple
    description: str
    sweep: tuple | None = None  # (parameter, comma-separated values) for `j3s ablate`


PRESETS = {
    "clean": Preset(
        synth=SynthSpec(n_classes=4, dim=10, set_size=50, samples_per_class=10, separation=5.0, seed=0),
        benchmark_args=("--no-hellinger", "--repeats", "5", "--trace-losses"),
        description="4 classes of signed 10-d features, 50 per set, 5 sigma apart",
    ),
    "intensity": Preset(
        synth=SynthSpec(n_classes=4, dim=64, set_size=50, samples_per_class=10, separation=5.0,
                        sigma=16.0, scale="intensity", seed=0),
        benchmark_args=("--repeats", "5"),
        description="8x8 gray frames on the 0-255 scale; for noise sweeps",
        sweep=("noise_sigma", "0,5,10,20"),
    ),
    "few-shot": Preset(
        synth=SynthSpec(n_classes=4, dim=10, set_size=50, samples_per_class=10, separation=5.0, seed=1),
        benchmark_args=("--no-hellinger", "--repeats", "5", "--few-shot-k", "1"),
        description="clean data, one gallery sample per class",
    ),
}


def preset_command(name: str, data_dir, out_dir) -> list:
    """argv (without the program name) that benchmarks a generated preset."""
    p = PRESETS[name]
    argv = ["--manifest", f"{data_dir}/manifest.json", "--out", str(out_dir), *p.benchmark_args]
    if p.sweep:
        return ["ablate", *argv, "--param", p.sweep[0], "--values", p.sweep[1]]
    return ["benchmark", *argv]
