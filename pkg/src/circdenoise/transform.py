"""Collaborative filtering: global spectral projections + Haar along the group.

The pair of projection stacks (U, V) is trained once per image (or per tile)
from all reference patches: for each Fourier slice along the band axis, U
holds the eigenvectors of the accumulated row covariance sum P P^H and V
those of the column covariance sum P^H P, eigenvalues descending.  Filtering
a group applies U^H . V per slice, a Haar analysis along the group axis,
one hard threshold, and the exact inverse.  Everything is float64/complex128.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimsError, EmptyTrainingSetError

# eigenvector phase convention: first component with magnitude above this
# (relative) floor is rotated to the positive real axis
_PHASE_TOL = 1e-12


@dataclass(frozen=True)
class GlobalBasis:
    """Per-slice unitary projections; u_slices and v_slices are (C, ps, ps)."""

    u_slices: np.ndarray
    v_slices: np.ndarray

    @property
    def patch_size(self) -> int:
        return self.u_slices.shape[1]

    @property
    def channels(self) -> int:
        return self.u_slices.shape[0]


def _fix_phase(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its first significant entry is real-positive."""
    mags = np.abs(vectors)
    floor = _PHASE_TOL * np.maximum(mags.max(axis=0), 1e-300)
    first = (mags > floor[None, :]).argmax(axis=0)
    lead = vectors[first, np.arange(vectors.shape[1])]
    lead_abs = np.abs(lead)
    safe = lead_abs > 0
    phase = np.where(safe, np.conj(lead) / np.where(safe, lead_abs, 1.0), 1.0)
    return vectors * phase[None, :]


def learn_global_basis(patches: np.ndarray) -> GlobalBasis:
    """Train (U, V) from an (N, ps, ps, C) stack of training patches.

    Eigendecompositions run on Fourier slices 0..floor(C/2); the rest are
    conjugate mirrors, so the stacks stay conjugate-symmetric and filtering
    real data yields real results.  eigh always returns a complete basis,
    so rank-deficient training sets still produce unitary projections.
    """
    patches = np.asarray(patches, dtype=np.float64)
    if patches.ndim != 4:
        raise DimsError(f"expected (N, ps, ps, C) patches, got ndim={patches.ndim}")
    n, ps, ps2, c = patches.shape
    if n == 0:
        raise EmptyTrainingSetError("basis training needs at least one patch")
    if ps != ps2:
        raise DimsError(f"patches must be square, got {ps}x{ps2}")
    ph = np.fft.fft(patches, axis=3)
    u_slices = np.empty((c, ps, ps), dtype=np.complex128)
    v_slices = np.empty((c, ps, ps), dtype=np.complex128)
    for i in range(c // 2 + 1):
        sl = ph[:, :, :, i]
        m_rows = np.einsum('nab,ncb->ac', sl, sl.conj())
        m_cols = np.einsum('nba,nbc->ac', sl.conj(), sl)
        _, u = np.linalg.eigh(m_rows)
        _, v = np.linalg.eigh(m_cols)
        u_slices[i] = _fix_phase(u[:, ::-1])
        v_slices[i] = _fix_phase(v[:, ::-1])
    for i in range(c // 2 + 1, c):
        u_slices[i] = u_slices[c - i].conj()
        v_slices[i] = v_slices[c - i].conj()
    return GlobalBasis(u_slices=u_slices, v_slices=v_slices)


def threshold_value(sigma: float, channels: int, group_size: int, patch_size: int) -> float:
    """Universal hard threshold sigma * sqrt(2 ln(C * K * ps^2))."""
    if sigma < 0:
        raise DimsError(f"sigma must be >= 0, got {sigma}")
    n = channels * group_size * patch_size * patch_size
    if n < 1:
        raise DimsError("coefficient count must be >= 1")
    return float(sigma * np.sqrt(2.0 * np.log(n)))


def hard_threshold(coeffs: np.ndarray, tau: float) -> tuple[np.ndarray, int]:
    """Zero entries with |s| < tau (boundary |s| == tau survives).

    Returns the filtered array and the retained-entry count.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    mask = np.abs(coeffs) >= tau
    return np.where(mask, coeffs, 0.0), int(mask.sum())


def _spectral_project(batch: np.ndarray, basis: GlobalBasis, forward: bool) -> np.ndarray:
    """Apply per-slice U^H . V (forward) or U . V^H (inverse) over a
    (G, K, ps, ps, C) batch.  Output is real."""
    if batch.shape[2:] != (basis.patch_size, basis.patch_size, basis.channels):
        raise DimsError(f"batch patches {batch.shape[2:]} do not fit a basis for "
                        f"({basis.patch_size}, {basis.patch_size}, {basis.channels})")
    bf = np.fft.fft(batch, axis=4)
    out = np.empty_like(bf)
    for i in range(basis.channels):
        u = basis.u_slices[i]
        v = basis.v_slices[i]
        if forward:
            out[:, :, :, :, i] = np.matmul(np.matmul(u.conj().T, bf[:, :, :, :, i]), v)
        else:
            out[:, :, :, :, i] = np.matmul(np.matmul(u, bf[:, :, :, :, i]), v.conj().T)
    return np.fft.ifft(out, axis=4).real


def _haar_apply(batch: np.ndarray, haar: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Analysis (rows of haar) or synthesis (columns) along group axis 1."""
    contracted = np.tensordot(batch, haar, axes=([1], [0 if inverse else 1]))
    return np.moveaxis(contracted, -1, 1)


def filter_groups(batch: np.ndarray, basis: GlobalBasis, haar: np.ndarray,
                  tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Full filter chain over a (G, K, ps, ps, C) batch.

    Returns the filtered batch and per-group retained-coefficient counts.
    """
    spec = _spectral_project(batch, basis, forward=True)
    coef = _haar_apply(spec, haar)
    mask = np.abs(coef) >= tau
    nnz = mask.reshape(mask.shape[0], -1).sum(axis=1)
    coef = np.where(mask, coef, 0.0)
    back = _haar_apply(coef, haar, inverse=True)
    return _spectral_project(back, basis, forward=False), nnz


def _group_to_batch(group_data: np.ndarray) -> np.ndarray:
    group_data = np.asarray(group_data, dtype=np.float64)
    if group_data.ndim != 4:
        raise DimsError(f"expected (ps, ps, C, K) group data, got ndim={group_data.ndim}")
    return np.ascontiguousarray(group_data.transpose(3, 0, 1, 2))[None]


def _batch_to_group(batch: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(batch[0].transpose(1, 2, 3, 0))


def forward_transform(group_data: np.ndarray, basis: GlobalBasis, haar: np.ndarray) -> np.ndarray:
    """Coefficients of one (ps, ps, C, K) group: spectral projection per
    patch, then Haar analysis along the group axis."""
    batch = _group_to_batch(group_data)
    if haar.shape[0] != batch.shape[1]:
        raise DimsError(f"Haar order {haar.shape[0]} != group size {batch.shape[1]}")
    return _batch_to_group(_haar_apply(_spectral_project(batch, basis, forward=True), haar))


def inverse_transform(coeffs: np.ndarray, basis: GlobalBasis, haar: np.ndarray) -> np.ndarray:
    """Exact inverse of forward_transform."""
    batch = _group_to_batch(coeffs)
    if haar.shape[0] != batch.shape[1]:
        raise DimsError(f"Haar order {haar.shape[0]} != group size {batch.shape[1]}")
    return _batch_to_group(_spectral_project(_haar_apply(batch, haar, inverse=True),
                                             basis, forward=False))
