"""Noise estimation and closed-form adjustment.

A matched group of K patches, stacked as the rows of a circulant embedding,
has a K x K Gram matrix that is symmetric circulant, so its eigenvalues are
the DFT of the first row and two eigen-pairs come for free: the constant
vector with eigenvalue ||sum p_k||^2, and (K even) the alternating vector
with eigenvalue ||sum (-1)^k p_k||^2.  The ascending rank of the alternating
eigenvalue separates genuinely self-similar groups (low rank: members agree,
adjacent-difference energy is tiny) from noise-dominated ones; a subimage
majority vote over sampled groups decides whether the working sigma is
divided by the adjustment factor.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimsError, OddGroupError
from .grouping import guide_channel

# relative tolerance for eigenvalue tie detection in rank_position
_TIE_TOL = 1e-9

# scale factor between the median absolute deviation and the standard
# deviation of a centered Gaussian
_MAD_TO_SIGMA = 0.6745

_SIGMA_CLAMP = (0.0, 100.0)


@dataclass(frozen=True)
class EigenPairs:
    """The two closed-form eigen-pairs of the group circulant Gram matrix."""

    lam_max: float
    u_max: np.ndarray
    lam_alt: float
    u_alt: np.ndarray


@dataclass(frozen=True)
class NoiseModel:
    """Per-subimage sigma decision with its provenance."""

    sigma_est: float
    sigma_hat: float
    adjusted: bool
    rank_median: int
    ranks: tuple[int, ...]
    votes_adjust: int
    source: str = "user"   # user | baseline-estimator | external


def _flatten_group(group_data: np.ndarray) -> np.ndarray:
    """(ps, ps, C, K) -> (K, m) patch row-vectors."""
    group_data = np.asarray(group_data, dtype=np.float64)
    if group_data.ndim != 4:
        raise DimsError(f"expected (ps, ps, C, K) group data, got ndim={group_data.ndim}")
    k = group_data.shape[3]
    return group_data.reshape(-1, k).T


def circ_gram_first_row(group_data: np.ndarray) -> np.ndarray:
    """rho_m = sum_k p_k . p_{(k+m) mod K} without materializing the
    K x (K m) circulant embedding."""
    p = _flatten_group(group_data)
    k = p.shape[0]
    q = p @ p.T
    idx = np.arange(k)
    rho = np.empty(k, dtype=np.float64)
    for m in range(k):
        rho[m] = q[idx, (idx + m) % k].sum()
    return rho


def circ_gram_spectrum(group_data: np.ndarray) -> np.ndarray:
    """All K eigenvalues (real, unsorted: DFT order of the first row)."""
    return np.fft.fft(circ_gram_first_row(group_data)).real


def circ_gram_eigenpairs(group_data: np.ndarray) -> EigenPairs:
    """Closed-form extreme pair: constant and alternating eigenvectors.

    The alternating pair needs K even.  Vectors are unit length; the
    alternating one is (1/sqrt(K)) (-1, 1, -1, 1, ...).
    """
    p = _flatten_group(group_data)
    k = p.shape[0]
    if k % 2 != 0:
        raise OddGroupError(f"group size must be even, got {k}")
    r_sum = p.sum(axis=0)
    lam_max = float(r_sum @ r_sum)
    signs = np.where(np.arange(k) % 2 == 0, -1.0, 1.0)
    alt = signs @ p
    lam_alt = float(alt @ alt)
    inv = 1.0 / np.sqrt(k)
    return EigenPairs(lam_max=lam_max, u_max=np.full(k, inv),
                      lam_alt=lam_alt, u_alt=signs * inv)


def rank_position(group_data: np.ndarray) -> int:
    """1-based ascending rank of the alternating eigenvalue among all K.

    Ties (within 1e-9 of the spectrum scale) resolve to the smallest index,
    so an exactly self-similar group ranks 1.
    """
    spectrum = circ_gram_spectrum(group_data)
    k = spectrum.size
    if k % 2 != 0:
        raise OddGroupError(f"group size must be even, got {k}")
    lam_alt = spectrum[k // 2]
    scale = float(np.max(np.abs(spectrum))) if k else 0.0
    return int((spectrum < lam_alt - _TIE_TOL * scale).sum()) + 1


def adjust_sigma(sigma_est: float, rank: int, adjust_factor: float = 1.2,
                 rank_threshold: int = 13) -> float:
    """Divide sigma by adjust_factor when the group ranks clean
    (rank <= rank_threshold); otherwise keep it."""
    if sigma_est < 0:
        raise DimsError(f"sigma must be >= 0, got {sigma_est}")
    if rank <= rank_threshold:
        return sigma_est / adjust_factor
    return sigma_est


def estimate_sigma_baseline(image: np.ndarray) -> float:
    """Robust MAD estimate from the finest diagonal Haar details of the
    guide channel, clamped to [0, 100] on the 0-255 scale."""
    plane = guide_channel(image)
    h, w = plane.shape
    if h < 2 or w < 2:
        raise DimsError(f"need at least 2x2 pixels, got {plane.shape}")
    h -= h % 2
    w -= w % 2
    x = plane[:h, :w]
    detail = (x[0::2, 0::2] - x[0::2, 1::2] - x[1::2, 0::2] + x[1::2, 1::2]) * 0.5
    sigma = float(np.median(np.abs(detail))) / _MAD_TO_SIGMA
    return float(np.clip(sigma, *_SIGMA_CLAMP))


def vote_sigma(subimage: np.ndarray, sigma_est: float, grouper,
               sample_groups: int = 16, patch_size: int = 8,
               adjust_factor: float = 1.2, rank_threshold: int = 13,
               seed: int | tuple = 0, source: str = "user") -> NoiseModel:
    """Majority vote over sampled groups; ties keep sigma_est.

    grouper maps a (row, col) reference coordinate to (ps, ps, C, K) group
    data; sampling uses an RNG seeded deterministically from `seed`.
    """
    subimage = np.asarray(subimage, dtype=np.float64)
    if subimage.ndim != 3:
        raise DimsError(f"expected (H, W, C) subimage, got ndim={subimage.ndim}")
    h, w = subimage.shape[:2]
    if h < patch_size or w < patch_size:
        raise DimsError(f"subimage {subimage.shape[:2]} smaller than patch {patch_size}")
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, h - patch_size + 1, size=sample_groups)
    cols = rng.integers(0, w - patch_size + 1, size=sample_groups)
    ranks = []
    for r, c in zip(rows, cols):
        ranks.append(rank_position(grouper((int(r), int(c)))))
    votes = sum(1 for a in ranks if a <= rank_threshold)
    adjusted = 2 * votes > len(ranks)
    sigma_hat = sigma_est / adjust_factor if adjusted else sigma_est
    return NoiseModel(sigma_est=float(sigma_est), sigma_hat=float(sigma_hat),
                      adjusted=adjusted, rank_median=int(np.median(ranks)),
                      ranks=tuple(ranks), votes_adjust=votes, source=source)
