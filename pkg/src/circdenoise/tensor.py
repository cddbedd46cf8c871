"""Third-order tensor algebra built on the circulant product.

An (n1, n2, n3) real tensor is treated as an n1 x n2 matrix of tubes along
the third mode.  The tensor-tensor product is ordinary matrix multiplication
of the block-circulant embeddings, computed slice-by-slice in the Fourier
domain: unnormalized forward DFT along mode 3, per-slice matmul, inverse DFT
with the 1/n3 factor.  All factorizations keep double precision and recover
exact conjugate symmetry so spatial-domain results are real.
"""

import numpy as np

from .errors import DimsError, NotPowerOfTwoError

# Imaginary residue above this relative level means the input was not
# conjugate-symmetric and the result is returned as complex.
_IMAG_TOL = 1e-9


def dft_mode3(t: np.ndarray) -> np.ndarray:
    """Unnormalized DFT along the third mode; returns complex128."""
    t = np.asarray(t)
    if t.ndim != 3:
        raise DimsError(f"expected a 3rd-order tensor, got ndim={t.ndim}")
    return np.fft.fft(t, axis=2)


def idft_mode3(f: np.ndarray) -> np.ndarray:
    """Inverse DFT along mode 3 (applies 1/n3).

    If the imaginary residue is below 1e-9 relative to the real part the
    result is returned as a real tensor, otherwise as complex.
    """
    f = np.asarray(f)
    if f.ndim != 3:
        raise DimsError(f"expected a 3rd-order tensor, got ndim={f.ndim}")
    g = np.fft.ifft(f, axis=2)
    if g.size == 0:
        return g.real
    scale = max(1.0, float(np.max(np.abs(g.real))))
    if float(np.max(np.abs(g.imag))) <= _IMAG_TOL * scale:
        return np.ascontiguousarray(g.real)
    return g


def bcirc(t: np.ndarray) -> np.ndarray:
    """Block-circulant embedding: (n1*n3) x (n2*n3) matrix.

    Block (i, j) holds frontal slice (i - j) mod n3, so the first block
    column stacks the slices in order.
    """
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 3:
        raise DimsError(f"expected a 3rd-order tensor, got ndim={t.ndim}")
    n1, n2, n3 = t.shape
    out = np.empty((n1 * n3, n2 * n3), dtype=np.float64)
    for i in range(n3):
        for j in range(n3):
            out[i * n1:(i + 1) * n1, j * n2:(j + 1) * n2] = t[:, :, (i - j) % n3]
    return out


def t_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor-tensor product: bcirc(a @ b) == bcirc(a) @ bcirc(b).

    a is (n1, m, n3), b is (m, n2, n3); the result is (n1, n2, n3).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 3 or b.ndim != 3:
        raise DimsError("t_product operands must be 3rd-order tensors")
    if a.shape[1] != b.shape[0] or a.shape[2] != b.shape[2]:
        raise DimsError(f"incompatible shapes {a.shape} * {b.shape}")
    fa = np.fft.fft(a, axis=2).transpose(2, 0, 1)
    fb = np.fft.fft(b, axis=2).transpose(2, 0, 1)
    fc = np.matmul(fa, fb).transpose(1, 2, 0)
    return np.fft.ifft(fc, axis=2).real


def t_transpose(t: np.ndarray) -> np.ndarray:
    """Tensor transpose: transpose each slice, reverse slices 2..n3."""
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 3:
        raise DimsError(f"expected a 3rd-order tensor, got ndim={t.ndim}")
    n1, n2, n3 = t.shape
    out = np.empty((n2, n1, n3), dtype=np.float64)
    out[:, :, 0] = t[:, :, 0].T
    for i in range(1, n3):
        out[:, :, i] = t[:, :, n3 - i].T
    return out


def t_svd(t: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full t-SVD: t == U * S * V^T with U, V orthogonal, S f-diagonal.

    SVDs are computed for Fourier slices 0..floor(n3/2) only; the remaining
    slices are filled by conjugate mirroring, which guarantees the inverse
    DFT yields exactly real factors.  Per-slice singular values are
    nonnegative and sorted descending.
    """
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 3:
        raise DimsError(f"expected a 3rd-order tensor, got ndim={t.ndim}")
    n1, n2, n3 = t.shape
    ft = np.fft.fft(t, axis=2)
    fu = np.empty((n1, n1, n3), dtype=np.complex128)
    fs = np.zeros((n1, n2, n3), dtype=np.complex128)
    fv = np.empty((n2, n2, n3), dtype=np.complex128)
    kmin = min(n1, n2)
    for i in range(n3 // 2 + 1):
        u, s, vh = np.linalg.svd(ft[:, :, i], full_matrices=True)
        fu[:, :, i] = u
        fs[:kmin, :kmin, i] = np.diag(s)
        fv[:, :, i] = vh.conj().T
    for i in range(n3 // 2 + 1, n3):
        fu[:, :, i] = fu[:, :, n3 - i].conj()
        fs[:, :, i] = fs[:, :, n3 - i].conj()
        fv[:, :, i] = fv[:, :, n3 - i].conj()
    u = np.fft.ifft(fu, axis=2).real
    s = np.fft.ifft(fs, axis=2).real
    v = np.fft.ifft(fv, axis=2).real
    return u, s, v


def haar_matrix(k: int) -> np.ndarray:
    """Orthogonal Haar matrix of order k (k a power of two, k >= 2).

    Built by the doubling recursion
        H_2N = (1/sqrt(2)) [ H_N kron (1, 1) ; I_N kron (1, -1) ]
    from H_2 = (1/sqrt(2)) [[1, 1], [1, -1]].  Row 1 is the constant vector
    (1/sqrt(k)) (1, ..., 1).
    """
    if not isinstance(k, (int, np.integer)) or k < 2 or (k & (k - 1)) != 0:
        raise NotPowerOfTwoError(f"order must be a power of two >= 2, got {k!r}")
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) * inv_sqrt2
    while h.shape[0] < k:
        n = h.shape[0]
        top = np.kron(h, np.array([1.0, 1.0]))
        bottom = np.kron(np.eye(n), np.array([1.0, -1.0]))
        h = np.vstack((top, bottom)) * inv_sqrt2
    return h
