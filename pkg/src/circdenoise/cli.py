"""Command-line interface.

Exit codes: 0 success, 2 usage/argument problems, 3 malformed files,
4 numerical failure.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bench import load_sweep_spec, run_sweep, write_csv
from .config import DenoiseConfig
from .errors import DenoiseError, FormatError, NumericError
from .fileio import load_image, load_tensor, save_image, save_tensor
from .metrics import MetricsReport, add_awgn, psnr, ssim
from .pipeline import denoise_with_stats

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_NUMERIC = 4


def _is_tensor_path(path) -> bool:
    return Path(path).suffix.lower() == ".htsv"


def _load_any(path) -> np.ndarray:
    if _is_tensor_path(path):
        return load_tensor(path)
    return load_image(path)


def _save_any(path, arr: np.ndarray) -> None:
    if _is_tensor_path(path):
        save_tensor(path, arr)
    else:
        save_image(path, arr)


def _read_sigma_file(path) -> tuple[float, ...]:
    values = []
    for ln, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError as exc:
            raise FormatError(f"{path}:{ln}: not a number: {line!r}") from exc
    if not values:
        raise FormatError(f"{path}: no sigma values found")
    return tuple(values)


def _cmd_denoise(args) -> int:
    img = _load_any(args.input)
    if args.sigma_file is not None:
        cfg = DenoiseConfig(sigma_source="external",
                            external_sigmas=_read_sigma_file(args.sigma_file),
                            adaptive=True)
    elif args.adaptive:
        cfg = DenoiseConfig(sigma_source="baseline", adaptive=True)
    else:
        cfg = DenoiseConfig(sigma=args.sigma, sigma_source="user")
    from dataclasses import replace
    cfg = replace(cfg, patch_size=args.ps, group_size=args.k,
                  search_radius=args.window, stride_ref=args.stride,
                  threads=args.threads, seed=args.seed)
    out, stats = denoise_with_stats(img, cfg, profile=args.profile)
    _save_any(args.output, out)
    if args.report is not None:
        p = s = None
        if args.metrics_ref is not None:
            ref = _load_any(args.metrics_ref)
            p = psnr(ref, out)
            s = ssim(ref, out)
        sigma_used = stats.sigma_used[0] if len(stats.sigma_used) == 1 else stats.sigma_used
        report = MetricsReport(psnr=p, ssim=s, wall_time=stats.seconds,
                               sigma_used=sigma_used,
                               adjusted_fraction=stats.adjusted_fraction)
        Path(args.report).write_text(json.dumps(report.to_json_dict(), indent=2) + "\n",
                                     encoding="utf-8")
    return EXIT_OK


def _cmd_addnoise(args) -> int:
    img = _load_any(args.input)
    noisy = add_awgn(img, args.sigma, seed=args.seed)
    _save_any(args.output, noisy)
    return EXIT_OK


def _cmd_bench(args) -> int:
    spec = load_sweep_spec(args.config)
    rows = run_sweep(spec)
    write_csv(rows, args.csv)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="circdenoise",
                                     description="Nonlocal collaborative image denoiser")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("denoise", help="denoise an image or band cube")
    d.add_argument("--input", required=True)
    d.add_argument("--output", required=True)
    mode = d.add_mutually_exclusive_group(required=True)
    mode.add_argument("--sigma", type=float, help="known noise level, 0-255 scale")
    mode.add_argument("--adaptive", action="store_true",
                      help="estimate and adjust sigma per subimage")
    mode.add_argument("--sigma-file", help="per-subimage sigma values, one per line")
    d.add_argument("--ps", type=int, default=8, help="patch size")
    d.add_argument("--k", type=int, default=32, help="group size (power of two)")
    d.add_argument("--window", type=int, default=18, help="search radius")
    d.add_argument("--stride", type=int, default=4, help="reference stride")
    d.add_argument("--threads", type=int, default=1)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--profile", choices=("srgb", "multiband"), default="srgb")
    d.add_argument("--metrics-ref", help="clean reference for --report metrics")
    d.add_argument("--report", help="write a JSON metrics report here")
    d.set_defaults(func=_cmd_denoise)

    a = sub.add_parser("addnoise", help="add white Gaussian noise")
    a.add_argument("--input", required=True)
    a.add_argument("--output", required=True)
    a.add_argument("--sigma", type=float, required=True)
    a.add_argument("--seed", type=int, default=0)
    a.set_defaults(func=_cmd_addnoise)

    b = sub.add_parser("bench", help="run a phantom sweep and write CSV")
    b.add_argument("--config", required=True, help="sweep spec JSON")
    b.add_argument("--csv", required=True, help="output CSV path")
    b.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (NumericError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DenoiseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
