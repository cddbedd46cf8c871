"""Quality metrics and synthetic noise."""

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DimsError
from .grouping import guide_channel

_C1 = (0.01 * 255.0) ** 2
_C2 = (0.03 * 255.0) ** 2
_SSIM_WIN = 8
_SSIM_SIGMA = 1.5


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical inputs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimsError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(peak * peak / mse))


def _ssim_kernel() -> np.ndarray:
    offs = np.arange(_SSIM_WIN, dtype=np.float64) - (_SSIM_WIN - 1) / 2.0
    k = np.exp(-(offs * offs) / (2.0 * _SSIM_SIGMA * _SSIM_SIGMA))
    return k / k.sum()


_KERNEL_1D = _ssim_kernel()


def _windowed(x: np.ndarray) -> np.ndarray:
    """Separable Gaussian-weighted window means, valid mode."""
    t = sliding_window_view(x, _SSIM_WIN, axis=0)
    t = np.einsum('iwk,k->iw', t, _KERNEL_1D)
    t = sliding_window_view(t, _SSIM_WIN, axis=1)
    return np.einsum('iwk,k->iw', t, _KERNEL_1D)


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean structural similarity on the guide channel.

    8x8 sliding windows with Gaussian weighting (sigma 1.5), stabilizers
    C1 = (0.01*255)^2 and C2 = (0.03*255)^2.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimsError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a = a[:, :, None]
        b = b[:, :, None]
    pa = guide_channel(a)
    pb = guide_channel(b)
    if pa.shape[0] < _SSIM_WIN or pa.shape[1] < _SSIM_WIN:
        raise DimsError(f"need at least {_SSIM_WIN}x{_SSIM_WIN} pixels")
    mu_a = _windowed(pa)
    mu_b = _windowed(pb)
    var_a = _windowed(pa * pa) - mu_a * mu_a
    var_b = _windowed(pb * pb) - mu_b * mu_b
    cov = _windowed(pa * pb) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + _C1) * (2.0 * cov + _C2)
    den = (mu_a * mu_a + mu_b * mu_b + _C1) * (var_a + var_b + _C2)
    return float(np.mean(num / den))


def add_awgn(image: np.ndarray, sigma: float, seed: int | tuple = 0) -> np.ndarray:
    """Additive white Gaussian noise on the 0-255 scale; no clamping."""
    image = np.asarray(image, dtype=np.float64)
    if sigma < 0:
        raise DimsError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return image.copy()
    rng = np.random.default_rng(seed)
    return image + rng.normal(0.0, sigma, size=image.shape)


@dataclass
class MetricsReport:
    """Summary written by the CLI's --report flag."""

    psnr: float | None
    ssim: float | None
    wall_time: float
    sigma_used: float | list | None
    adjusted_fraction: float

    def to_json_dict(self) -> dict:
        def enc(x):
            if isinstance(x, float) and math.isinf(x):
                return "inf"
            return x
        return {
            "psnr": enc(self.psnr),
            "ssim": self.ssim,
            "wall_time": self.wall_time,
            "sigma_used": self.sigma_used,
            "adjusted_fraction": self.adjusted_fraction,
        }
