"""End-to-end denoising pipeline.

Flow per frame: schedule reference coordinates, train the global projection
pair from all reference patches, then for every reference match a group,
filter it (spectral projection, Haar analysis along the group, one hard
threshold, exact inverse), and average all patch estimates with uniform
weight 1.  Outputs clamp to [0, 255].

Adaptive mode tiles the image into subimages (edge remainders merge into the
last tile), estimates sigma per tile, adjusts it by a majority vote over
sampled groups, and denoises each tile independently.

Parallelism: references are split into one task per reference row.  The
decomposition depends only on the image and config, never on the worker
count; each task fills a private row-band accumulator and bands merge in
task order, so results are bit-identical for any `threads` value.  Workers
are forked processes and receive the frame context once via the pool
initializer.
"""

import multiprocessing as mp
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .config import DenoiseConfig
from .errors import CoordError, DimsError, NumericError, PatchSizeError
from .grouping import Matcher, MatchStats, reference_positions
from .noise import NoiseModel, estimate_sigma_baseline, vote_sigma
from .tensor import haar_matrix
from .transform import GlobalBasis, filter_groups, learn_global_basis, threshold_value

_PROFILES = ("srgb", "multiband")

# NoiseModel provenance labels keyed by config sigma_source
_SOURCE_NAMES = {"user": "user", "baseline": "baseline-estimator",
                 "external": "external"}


@dataclass
class Accumulator:
    """Numerator/denominator buffers for overlapping patch estimates."""

    value_sum: np.ndarray
    weight_sum: np.ndarray

    @classmethod
    def zeros(cls, shape: tuple[int, int, int]) -> "Accumulator":
        return cls(value_sum=np.zeros(shape, dtype=np.float64),
                   weight_sum=np.zeros(shape, dtype=np.float64))


def aggregate(acc: Accumulator, estimates: np.ndarray, coords: np.ndarray) -> None:
    """Add (ps, ps, C, K) patch estimates at (K, 2) coords, weight 1 each."""
    estimates = np.asarray(estimates, dtype=np.float64)
    if estimates.ndim != 4:
        raise DimsError(f"expected (ps, ps, C, K) estimates, got ndim={estimates.ndim}")
    ps = estimates.shape[0]
    h, w = acc.value_sum.shape[:2]
    for k in range(coords.shape[0]):
        r, c = int(coords[k, 0]), int(coords[k, 1])
        if not (0 <= r <= h - ps and 0 <= c <= w - ps):
            raise CoordError(f"patch at ({r}, {c}) falls outside {h}x{w}")
        acc.value_sum[r:r + ps, c:c + ps, :] += estimates[:, :, :, k]
        acc.weight_sum[r:r + ps, c:c + ps, :] += 1.0


@dataclass
class RunStats:
    """Diagnostics for one denoise call."""

    profile: str
    sigma_models: list[NoiseModel] = field(default_factory=list)
    sigma_used: list[float] = field(default_factory=list)
    adjusted_fraction: float = 0.0
    n_tiles: int = 1
    n_groups: int = 0
    retained_coeffs: int = 0
    match_stats: MatchStats = field(default_factory=MatchStats)
    basis_ids: tuple[int, ...] = ()
    tau_values: list[float] = field(default_factory=list)
    seconds: float = 0.0


@dataclass
class _FrameContext:
    """Everything a worker needs; picklable (no views)."""

    image: np.ndarray
    cfg: DenoiseConfig
    use_gcp: bool
    basis: GlobalBasis
    haar: np.ndarray
    tau: float
    row_tasks: list


_CTX: _FrameContext | None = None
_MATCHER: Matcher | None = None


def _init_worker(ctx: _FrameContext) -> None:
    global _CTX, _MATCHER
    _CTX = ctx
    _MATCHER = Matcher(ctx.image, ctx.cfg, use_gcp=ctx.use_gcp)


def _run_task(task_idx: int):
    """Match, filter, and band-accumulate one reference row."""
    ctx, matcher = _CTX, _MATCHER
    cfg = ctx.cfg
    ps, k = cfg.patch_size, cfg.group_size
    refs = ctx.row_tasks[task_idx]
    g = refs.shape[0]
    s = matcher.stats
    before = (s.green_refs, s.avg_refs, s.guide_refs, s.candidates, s.value_pairs)
    coords = np.empty((g, k, 2), dtype=np.int64)
    for gi in range(g):
        coords[gi], _ = matcher.match_coords((refs[gi, 0], refs[gi, 1]))
    batch = np.ascontiguousarray(matcher.gather(coords))
    filtered, nnz = filter_groups(batch, ctx.basis, ctx.haar, ctx.tau)
    r_lo = int(coords[:, :, 0].min())
    r_hi = int(coords[:, :, 0].max()) + ps
    width, ch = ctx.image.shape[1], ctx.image.shape[2]
    vband = np.zeros((r_hi - r_lo, width, ch), dtype=np.float64)
    wband = np.zeros((r_hi - r_lo, width, ch), dtype=np.float64)
    for gi in range(g):
        for ki in range(k):
            r = int(coords[gi, ki, 0]) - r_lo
            c = int(coords[gi, ki, 1])
            vband[r:r + ps, c:c + ps, :] += filtered[gi, ki]
            wband[r:r + ps, c:c + ps, :] += 1.0
    after = (s.green_refs, s.avg_refs, s.guide_refs, s.candidates, s.value_pairs)
    delta = tuple(a - b for a, b in zip(after, before))
    return r_lo, r_hi, vband, wband, int(nnz.sum()), delta


def _run_tasks(ctx: _FrameContext, threads: int) -> list:
    n = len(ctx.row_tasks)
    if threads <= 1 or n <= 1:
        _init_worker(ctx)
        return [_run_task(i) for i in range(n)]
    workers = min(threads, n)
    chunk = max(1, n // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers,
                             mp_context=mp.get_context("fork"),
                             initializer=_init_worker,
                             initargs=(ctx,)) as pool:
        return list(pool.map(_run_task, range(n), chunksize=chunk))


def _gather_training_patches(frame: np.ndarray, ps: int, stride: int) -> np.ndarray:
    rows = reference_positions(frame.shape[0], ps, stride)
    cols = reference_positions(frame.shape[1], ps, stride)
    view = sliding_window_view(frame, (ps, ps), axis=(0, 1))
    sel = view[np.repeat(rows, cols.size), np.tile(cols, rows.size)]
    return np.ascontiguousarray(np.moveaxis(sel, 1, -1))


def _denoise_frame(frame: np.ndarray, sigma: float, cfg: DenoiseConfig,
                   use_gcp: bool, basis: GlobalBasis | None = None):
    """Single full pass over one frame with a fixed sigma."""
    ps = cfg.patch_size
    h, w, ch = frame.shape
    if basis is None:
        basis = learn_global_basis(_gather_training_patches(frame, ps, cfg.stride_ref))
    haar = haar_matrix(cfg.group_size)
    tau = threshold_value(sigma, ch, cfg.group_size, ps)
    rows = reference_positions(h, ps, cfg.stride_ref)
    cols = reference_positions(w, ps, cfg.stride_ref)
    row_tasks = []
    for r in rows:
        task = np.empty((cols.size, 2), dtype=np.int64)
        task[:, 0] = r
        task[:, 1] = cols
        row_tasks.append(task)
    ctx = _FrameContext(image=frame, cfg=cfg, use_gcp=use_gcp, basis=basis,
                        haar=haar, tau=tau, row_tasks=row_tasks)
    results = _run_tasks(ctx, cfg.threads)
    acc = Accumulator.zeros((h, w, ch))
    retained = 0
    deltas = np.zeros(5, dtype=np.int64)
    for r_lo, r_hi, vband, wband, nnz, delta in results:
        acc.value_sum[r_lo:r_hi] += vband
        acc.weight_sum[r_lo:r_hi] += wband
        retained += nnz
        deltas += np.asarray(delta, dtype=np.int64)
    if not np.all(acc.weight_sum > 0):
        raise NumericError("aggregation left uncovered pixels")
    out = acc.value_sum / acc.weight_sum
    np.clip(out, 0.0, 255.0, out=out)
    info = {
        "basis": basis,
        "tau": tau,
        "n_groups": sum(t.shape[0] for t in row_tasks),
        "retained": retained,
        "match_delta": deltas,
    }
    return out, info


def tile_bounds(h: int, w: int, tile: int) -> list[tuple[int, int, int, int]]:
    """Row-major (r0, r1, c0, c1) tiles; remainders below one tile edge merge
    into the preceding tile."""

    def starts(n: int) -> list[int]:
        s = list(range(0, n, tile))
        if len(s) > 1 and n - s[-1] < tile:
            s.pop()
        return s

    rs, cs = starts(h), starts(w)
    bounds = []
    for i, r0 in enumerate(rs):
        r1 = rs[i + 1] if i + 1 < len(rs) else h
        for j, c0 in enumerate(cs):
            c1 = cs[j + 1] if j + 1 < len(cs) else w
            bounds.append((r0, r1, c0, c1))
    return bounds


def _resolve_sigma(tile_img: np.ndarray, cfg: DenoiseConfig, tile_idx: int) -> float:
    if cfg.sigma_source == "user":
        return float(cfg.sigma)
    if cfg.sigma_source == "baseline":
        return estimate_sigma_baseline(tile_img)
    sigmas = cfg.external_sigmas
    if tile_idx >= len(sigmas):
        raise DimsError(f"external sigma list has {len(sigmas)} entries, "
                        f"tile {tile_idx} requested")
    return float(sigmas[tile_idx])


def _tile_grouper(matcher: Matcher):
    def grouper(coord):
        return matcher.group(coord).data
    return grouper


def denoise_with_stats(image: np.ndarray, cfg: DenoiseConfig,
                       profile: str = "srgb") -> tuple[np.ndarray, RunStats]:
    """Denoise and return (output, RunStats)."""
    t0 = time.perf_counter()
    cfg.validate()
    if profile not in _PROFILES:
        raise DimsError(f"profile must be one of {_PROFILES}, got {profile!r}")
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3:
        raise DimsError(f"expected (H, W, C) image, got ndim={img.ndim}")
    h, w, ch = img.shape
    ps = cfg.patch_size
    if h < ps or w < ps:
        raise PatchSizeError(f"image {h}x{w} smaller than patch size {ps}")
    if profile == "srgb" and ch not in (1, 3):
        raise DimsError(f"srgb profile expects 1 or 3 channels, got {ch}")
    if not np.all(np.isfinite(img)):
        raise NumericError("input contains non-finite values")
    use_gcp = bool(cfg.use_gcp and profile == "srgb" and ch == 3)
    stats = RunStats(profile=profile)

    if not cfg.adaptive:
        if cfg.sigma_source == "external":
            if len(cfg.external_sigmas) != 1:
                raise DimsError("non-adaptive external sigma needs exactly one value")
            sigma = float(cfg.external_sigmas[0])
        else:
            sigma = _resolve_sigma(img, cfg, 0)
        out, info = _denoise_frame(img, sigma, cfg, use_gcp)
        stats.sigma_used = [sigma]
        stats.tau_values = [info["tau"]]
        stats.n_groups = info["n_groups"]
        stats.retained_coeffs = info["retained"]
        stats.basis_ids = (id(info["basis"]),)
        _fold_match_delta(stats.match_stats, info["match_delta"])
    else:
        tiles = tile_bounds(h, w, cfg.adaptive_cfg.tile)
        if cfg.sigma_source == "external" and len(cfg.external_sigmas) != len(tiles):
            raise DimsError(f"external sigma list has {len(cfg.external_sigmas)} "
                            f"entries for {len(tiles)} tiles")
        shared_basis = None
        if not cfg.basis_scope_per_tile:
            shared_basis = learn_global_basis(
                _gather_training_patches(img, ps, cfg.stride_ref))
        out = np.empty_like(img)
        acfg = cfg.adaptive_cfg
        basis_ids = []
        for ti, (r0, r1, c0, c1) in enumerate(tiles):
            sub = np.ascontiguousarray(img[r0:r1, c0:c1])
            sigma_est = _resolve_sigma(sub, cfg, ti)
            matcher = Matcher(sub, cfg, use_gcp=use_gcp)
            model = vote_sigma(sub, sigma_est, _tile_grouper(matcher),
                               sample_groups=acfg.sample_groups, patch_size=ps,
                               adjust_factor=acfg.adjust_factor,
                               rank_threshold=acfg.rank_threshold,
                               seed=(cfg.seed, ti),
                               source=_SOURCE_NAMES[cfg.sigma_source])
            tile_out, info = _denoise_frame(sub, model.sigma_hat, cfg, use_gcp,
                                            basis=shared_basis)
            out[r0:r1, c0:c1] = tile_out
            stats.sigma_models.append(model)
            stats.sigma_used.append(model.sigma_hat)
            stats.tau_values.append(info["tau"])
            stats.n_groups += info["n_groups"]
            stats.retained_coeffs += info["retained"]
            basis_ids.append(id(info["basis"]))
            _fold_match_delta(stats.match_stats, info["match_delta"])
        stats.n_tiles = len(tiles)
        stats.basis_ids = tuple(basis_ids)
        stats.adjusted_fraction = (
            sum(1 for m in stats.sigma_models if m.adjusted) / len(tiles))

    if not np.all(np.isfinite(out)):
        raise NumericError("pipeline produced non-finite output")
    stats.seconds = time.perf_counter() - t0
    return out, stats


def _fold_match_delta(ms: MatchStats, delta) -> None:
    ms.green_refs += int(delta[0])
    ms.avg_refs += int(delta[1])
    ms.guide_refs += int(delta[2])
    ms.candidates += int(delta[3])
    ms.value_pairs += int(delta[4])


def denoise(image: np.ndarray, cfg: DenoiseConfig, profile: str = "srgb") -> np.ndarray:
    """Denoise an (H, W, C) image on the 0-255 scale; returns float64."""
    out, _ = denoise_with_stats(image, cfg, profile)
    return out


def denoise_multiband(image: np.ndarray, cfg: DenoiseConfig) -> np.ndarray:
    """Denoise an (H, W, C) band cube; grouping uses the middle-band mean."""
    out, _ = denoise_with_stats(image, cfg, profile="multiband")
    return out
