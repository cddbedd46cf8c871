"""Synthetic phantoms for tests and benchmarks.

Everything here is deterministic given (size, seed); noise is never baked
in, callers add it themselves.
"""

import numpy as np

from .errors import DimsError


def flat(size: int = 256, level: float = 128.0, channels: int = 1) -> np.ndarray:
    return np.full((size, size, channels), float(level))


def ramp(size: int = 256, channels: int = 1, lo: float = 0.0, hi: float = 255.0) -> np.ndarray:
    """Horizontal linear gradient from lo to hi."""
    row = np.linspace(lo, hi, size)
    img = np.tile(row, (size, 1))
    return np.repeat(img[:, :, None], channels, axis=2)


def checkerboard(size: int = 256, period: int = 8, low: float = 64.0,
                 high: float = 192.0, channels: int = 1) -> np.ndarray:
    if period < 1:
        raise DimsError(f"period must be >= 1, got {period}")
    idx = np.add.outer(np.arange(size) // period, np.arange(size) // period) % 2
    img = np.where(idx == 0, float(low), float(high))
    return np.repeat(img[:, :, None], channels, axis=2)


def filtered_texture(size: int = 256, seed: int = 0, corr: float = 4.0,
                     lo: float = 32.0, hi: float = 224.0, channels: int = 1) -> np.ndarray:
    """Gaussian-filtered white noise, contrast-stretched to [lo, hi].

    corr is the smoothing length in pixels; a few pixels gives a smoothly
    varying, strongly self-similar texture.
    """
    rng = np.random.default_rng(seed)
    white = rng.standard_normal((size, size))
    fy = np.fft.fftfreq(size)[:, None]
    fx = np.fft.rfftfreq(size)[None, :]
    transfer = np.exp(-2.0 * np.pi ** 2 * corr ** 2 * (fx * fx + fy * fy))
    smooth = np.fft.irfft2(np.fft.rfft2(white) * transfer, s=(size, size))
    span = smooth.max() - smooth.min()
    img = lo + (smooth - smooth.min()) * ((hi - lo) / span)
    return np.repeat(img[:, :, None], channels, axis=2)


def rgb_texture(size: int = 256, seed: int = 0, corr: float = 4.0) -> np.ndarray:
    """Three correlated bands around a shared texture (green strongest)."""
    base = filtered_texture(size, seed=seed, corr=corr)[:, :, 0]
    out = np.empty((size, size, 3))
    out[:, :, 0] = np.clip(0.85 * base + 12.0, 0.0, 255.0)
    out[:, :, 1] = base
    out[:, :, 2] = np.clip(1.05 * base - 18.0, 0.0, 255.0)
    return out


def multiband_sine(size: int = 32, bands: int = 8, period: float = 16.0) -> np.ndarray:
    """Smooth band cube: phase-shifted sinusoids around mid-gray."""
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    cube = np.empty((size, size, bands))
    for c in range(bands):
        phase = 2.0 * np.pi * c / bands
        cube[:, :, c] = 128.0 + 60.0 * np.sin(2.0 * np.pi * (x + 0.5 * y) / period + phase)
    return cube


def generate_phantoms(size: int = 256, seed: int = 0,
                      names: list[str] | None = None) -> dict[str, np.ndarray]:
    """Named phantom set; pass `names` to select a subset."""
    builders = {
        "flat": lambda: flat(size),
        "ramp": lambda: ramp(size),
        "checker2": lambda: checkerboard(size, period=2),
        "checker8": lambda: checkerboard(size, period=8),
        "texture": lambda: filtered_texture(size, seed=seed),
        "rgb_texture": lambda: rgb_texture(size, seed=seed),
        "multiband_sine": lambda: multiband_sine(min(size, 32)),
    }
    if names is None:
        names = list(builders)
    unknown = [n for n in names if n not in builders]
    if unknown:
        raise DimsError(f"unknown phantom names: {unknown}")
    return {n: builders[n]() for n in names}
