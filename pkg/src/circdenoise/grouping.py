"""Nonlocal patch search.

Similarity is measured on a single guide plane rather than the full stack of
bands: for 3-channel sRGB input the green channel is used whenever the
reference patch is green-dominant (its green Frobenius norm within a factor
gcp_gamma of the strongest channel), falling back to the per-pixel RGB mean
otherwise.  Any other band count uses the mean over the middle third of
bands.  This cuts the candidate scan to one value pair per pixel instead of
one per pixel per band.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .config import DenoiseConfig
from .errors import CoordError, DimsError, PatchSizeError


@dataclass
class MatchStats:
    """Instrumentation counters for the candidate scans."""

    green_refs: int = 0
    avg_refs: int = 0
    guide_refs: int = 0
    candidates: int = 0
    value_pairs: int = 0


@dataclass
class PatchGroup:
    """K matched patches: data is (ps, ps, C, K), reference first."""

    data: np.ndarray
    coords: np.ndarray      # (K, 2) int64 top-left corners, row then col
    distances: np.ndarray   # (K,) nondecreasing, distances[0] == 0


def guide_channel(image: np.ndarray) -> np.ndarray:
    """Per-pixel mean over the middle third of bands.

    For C == 1 this is the sole band; for C == 3 it is the green channel.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3:
        raise DimsError(f"expected (H, W, C) image, got ndim={image.ndim}")
    c = image.shape[2]
    lo = c // 3
    hi = c - c // 3
    return image[:, :, lo:hi].mean(axis=2)


def gcp_distance(p_i: np.ndarray, p_j: np.ndarray, gcp_gamma: float = 1.2) -> float:
    """Guide distance between two patches, p_i being the reference.

    For 3-channel patches: green-plane Frobenius distance when the reference
    is green-dominant, i.e. ||G|| >= max(||R||, ||B||) / gcp_gamma; otherwise
    the distance of the per-pixel RGB means.  The dominance test looks at the
    reference only, so the measure is deliberately asymmetric.
    """
    p_i = np.asarray(p_i, dtype=np.float64)
    p_j = np.asarray(p_j, dtype=np.float64)
    if p_i.shape != p_j.shape or p_i.ndim != 3:
        raise DimsError(f"patch shapes differ or not 3-D: {p_i.shape} vs {p_j.shape}")
    if p_i.shape[2] == 3:
        r_n, g_n, b_n = np.sqrt((p_i * p_i).sum(axis=(0, 1)))
        if g_n >= max(r_n, b_n) / gcp_gamma:
            return float(np.linalg.norm(p_i[:, :, 1] - p_j[:, :, 1]))
        return float(np.linalg.norm(p_i.mean(axis=2) - p_j.mean(axis=2)))
    return float(np.linalg.norm(guide_channel(p_i) - guide_channel(p_j)))


def reference_positions(length: int, patch_size: int, stride: int) -> np.ndarray:
    """Top-left positions along one axis: a stride grid, last patch clamped
    flush with the border so every pixel is covered."""
    if length < patch_size:
        raise PatchSizeError(f"axis of {length} cannot hold a {patch_size} patch")
    last = length - patch_size
    pos = list(range(0, last + 1, stride))
    if pos[-1] != last:
        pos.append(last)
    return np.asarray(pos, dtype=np.int64)


def schedule_references(dims: tuple[int, int], patch_size: int, stride: int) -> np.ndarray:
    """Row-major (N, 2) grid of reference coordinates over an H x W image."""
    rows = reference_positions(dims[0], patch_size, stride)
    cols = reference_positions(dims[1], patch_size, stride)
    rr = np.repeat(rows, cols.size)
    cc = np.tile(cols, rows.size)
    return np.stack((rr, cc), axis=1)


class Matcher:
    """Candidate search over one image, reusable across many references.

    Guide planes and their sliding-window views are built once; match_coords
    then costs one vectorized distance evaluation over the clipped
    (2*search_radius + 1)^2 window.
    """

    def __init__(self, image: np.ndarray, cfg: DenoiseConfig,
                 use_gcp: bool | None = None, stats: MatchStats | None = None):
        image = np.asarray(image, dtype=np.float64)
        if image.ndim != 3:
            raise DimsError(f"expected (H, W, C) image, got ndim={image.ndim}")
        ps = cfg.patch_size
        if image.shape[0] < ps or image.shape[1] < ps:
            raise PatchSizeError(f"image {image.shape[:2]} smaller than patch {ps}")
        self.image = image
        self.cfg = cfg
        self.stats = stats if stats is not None else MatchStats()
        gcp = cfg.use_gcp if use_gcp is None else use_gcp
        self.use_gcp = bool(gcp and image.shape[2] == 3)
        shape2 = (ps, ps)
        if self.use_gcp:
            self._green = np.ascontiguousarray(image[:, :, 1])
            self._avg = image.mean(axis=2)
            self._win_green = sliding_window_view(self._green, shape2)
            self._win_avg = sliding_window_view(self._avg, shape2)
        else:
            self._guide = np.ascontiguousarray(guide_channel(image))
            self._win_guide = sliding_window_view(self._guide, shape2)
        # full-image patch view for gathering group data: (Hv, Wv, C, ps, ps)
        self.win_full = sliding_window_view(image, shape2, axis=(0, 1))

    def _select_plane(self, r: int, c: int) -> np.ndarray:
        ps = self.cfg.patch_size
        if not self.use_gcp:
            self.stats.guide_refs += 1
            return self._win_guide
        patch = self.image[r:r + ps, c:c + ps, :]
        r_n, g_n, b_n = np.sqrt((patch * patch).sum(axis=(0, 1)))
        if g_n >= max(r_n, b_n) / self.cfg.gcp_gamma:
            self.stats.green_refs += 1
            return self._win_green
        self.stats.avg_refs += 1
        return self._win_avg

    def match_coords(self, ref: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
        """K best matches for one reference: ((K, 2) coords, (K,) distances).

        The reference occupies slot 0 with distance 0.  Remaining candidates
        are ordered by (distance, row, col); if the window holds fewer than K
        candidates the sorted matches repeat cyclically.
        """
        cfg = self.cfg
        ps, k, w, si = cfg.patch_size, cfg.group_size, cfg.search_radius, cfg.stride_inner
        hv = self.image.shape[0] - ps
        wv = self.image.shape[1] - ps
        r, c = int(ref[0]), int(ref[1])
        if not (0 <= r <= hv and 0 <= c <= wv):
            raise CoordError(f"reference {ref} outside valid top-left range")
        plane = self._select_plane(r, c)
        r0, r1 = max(0, r - w), min(hv, r + w)
        c0, c1 = max(0, c - w), min(wv, c + w)
        cand = plane[r0:r1 + 1:si, c0:c1 + 1:si]
        q = plane[r, c]
        diff = cand - q
        d2 = np.einsum('rcij,rcij->rc', diff, diff)
        nr, nc = d2.shape
        self.stats.candidates += nr * nc
        self.stats.value_pairs += nr * nc * ps * ps
        rows = np.arange(r0, r1 + 1, si, dtype=np.int64)
        cols = np.arange(c0, c1 + 1, si, dtype=np.int64)
        rr = np.repeat(rows, nc)
        cc = np.tile(cols, nr)
        d2f = d2.ravel()
        # drop the reference's own grid slot; it is re-inserted at the front
        keep = ~((rr == r) & (cc == c))
        rr, cc, d2f = rr[keep], cc[keep], d2f[keep]
        order = np.lexsort((cc, rr, d2f))
        m = order.size + 1
        out_r = np.empty(k, dtype=np.int64)
        out_c = np.empty(k, dtype=np.int64)
        dist = np.empty(k, dtype=np.float64)
        # cyclic duplication when the window is short of candidates; sorting
        # the slot indices keeps the emitted distances nondecreasing
        sel = np.sort(np.arange(k) % m)
        first = sel == 0
        out_r[first], out_c[first], dist[first] = r, c, 0.0
        rest = ~first
        idx = order[sel[rest] - 1]
        out_r[rest] = rr[idx]
        out_c[rest] = cc[idx]
        dist[rest] = np.sqrt(np.maximum(d2f[idx], 0.0))
        return np.stack((out_r, out_c), axis=1), dist

    def gather(self, coords: np.ndarray) -> np.ndarray:
        """Patch data for (..., 2) coords as (..., ps, ps, C)."""
        sel = self.win_full[coords[..., 0], coords[..., 1]]
        return np.moveaxis(sel, -3, -1)

    def group(self, ref: tuple[int, int]) -> PatchGroup:
        coords, dist = self.match_coords(ref)
        data = np.ascontiguousarray(np.transpose(self.gather(coords), (1, 2, 3, 0)))
        return PatchGroup(data=data, coords=coords, distances=dist)


def match_patches(image: np.ndarray, ref: tuple[int, int], cfg: DenoiseConfig,
                  use_gcp: bool | None = None, stats: MatchStats | None = None) -> PatchGroup:
    """One-shot grouping around a single reference coordinate."""
    return Matcher(image, cfg, use_gcp=use_gcp, stats=stats).group(ref)
