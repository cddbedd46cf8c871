"""Benchmark harness: parameter sweeps over phantom images, CSV out.

A sweep runs every (parameter value x phantom x sigma x seed) cell, records
PSNR/SSIM/time, and optionally an adaptive-on vs adaptive-off paired
comparison.  Failed cells are marked in the status column and the sweep
continues.  Metric columns are deterministic per seed; the timing columns
are wall-clock and obviously are not.
"""

import csv
import json
from dataclasses import dataclass, field, replace

from .config import DenoiseConfig, config_from_dict
from .errors import DenoiseError, DimsError, FormatError
from .metrics import add_awgn, psnr, ssim
from .phantoms import generate_phantoms
from .pipeline import denoise_with_stats

# the first six names are the stable public row format
COLUMNS = ["name", "sigma", "psnr_noisy", "psnr_out", "ssim_out", "seconds",
           "parameter", "value", "seed", "n_groups", "per_group_ms",
           "psnr_adaptive_off", "psnr_adaptive_on", "status"]


@dataclass
class SweepSpec:
    parameter: str | None = None           # DenoiseConfig field to sweep
    values: list = field(default_factory=list)
    base: DenoiseConfig = field(default_factory=lambda: DenoiseConfig(sigma=25.0))
    phantoms: list[str] = field(default_factory=lambda: ["texture"])
    size: int = 128
    phantom_seed: int = 0
    sigmas: list[float] = field(default_factory=lambda: [25.0])
    seeds: list[int] = field(default_factory=lambda: [0])
    adaptive_pair: bool = False
    profile: str = "srgb"


def sweep_spec_from_dict(d: dict) -> SweepSpec:
    d = dict(d)
    if "base" in d and isinstance(d["base"], dict):
        d["base"] = config_from_dict(d["base"])
    known = set(SweepSpec.__dataclass_fields__)
    unknown = set(d) - known
    if unknown:
        raise FormatError(f"unknown sweep fields: {sorted(unknown)}")
    return SweepSpec(**d)


def load_sweep_spec(path) -> SweepSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise FormatError(f"{path}: sweep spec must be a JSON object")
    return sweep_spec_from_dict(payload)


def _cell_config(spec: SweepSpec, value, sigma: float) -> DenoiseConfig:
    cfg = spec.base
    # keep the filter's noise level in step with the row's actual noise,
    # unless sigma itself is the swept parameter
    if spec.parameter != "sigma" and cfg.sigma_source == "user":
        cfg = replace(cfg, sigma=float(sigma))
    if spec.parameter is None:
        return cfg
    if spec.parameter not in DenoiseConfig.__dataclass_fields__:
        raise DimsError(f"cannot sweep unknown field {spec.parameter!r}")
    return replace(cfg, **{spec.parameter: value})


def run_sweep(spec: SweepSpec) -> list[dict]:
    """Run all sweep cells; one result dict per cell, COLUMNS keys."""
    images = generate_phantoms(size=spec.size, seed=spec.phantom_seed,
                               names=spec.phantoms)
    values = spec.values if spec.parameter is not None else [None]
    rows = []
    for name in spec.phantoms:
        clean = images[name]
        for sigma in spec.sigmas:
            for seed in spec.seeds:
                noisy = add_awgn(clean, sigma, seed=seed)
                for value in values:
                    row = {c: "" for c in COLUMNS}
                    row.update(name=name, sigma=sigma, seed=seed,
                               parameter=spec.parameter or "", value=value,
                               psnr_noisy=psnr(clean, noisy))
                    try:
                        cfg = _cell_config(spec, value, sigma)
                        out, stats = denoise_with_stats(noisy, cfg, spec.profile)
                        row["psnr_out"] = psnr(clean, out)
                        row["ssim_out"] = ssim(clean, out)
                        row["seconds"] = stats.seconds
                        row["n_groups"] = stats.n_groups
                        row["per_group_ms"] = (1000.0 * stats.seconds / stats.n_groups
                                               if stats.n_groups else "")
                        if spec.adaptive_pair:
                            off, _ = denoise_with_stats(
                                noisy, replace(cfg, adaptive=False), spec.profile)
                            on, _ = denoise_with_stats(
                                noisy, replace(cfg, adaptive=True), spec.profile)
                            row["psnr_adaptive_off"] = psnr(clean, off)
                            row["psnr_adaptive_on"] = psnr(clean, on)
                        row["status"] = "ok"
                    except DenoiseError as exc:
                        row["status"] = f"failed:{type(exc).__name__}"
                    rows.append(row)
    return rows


def write_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
