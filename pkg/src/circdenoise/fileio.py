"""File I/O: 8-bit PNG/PGM/PPM images and raw multiband tensors.

The multiband container is deliberately tiny: magic "HTSV", three
little-endian uint32 dims (H, W, C), then float32 little-endian samples in
row-major order with the band index fastest.  A 2x2x1 tensor is exactly
32 bytes.
"""

import struct
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DimsError, FormatError

_MAGIC = b"HTSV"
_HEADER = struct.Struct("<III")


def save_tensor(path, arr: np.ndarray) -> None:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 3:
        raise DimsError(f"expected (H, W, C) tensor, got ndim={arr.ndim}")
    h, w, c = arr.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(_HEADER.pack(h, w, c))
        fh.write(arr.astype("<f4").tobytes(order="C"))


def load_tensor(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != _MAGIC:
        raise FormatError(f"{path}: not an HTSV tensor file")
    h, w, c = _HEADER.unpack_from(data, 4)
    expected = 16 + 4 * h * w * c
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    return np.frombuffer(data, dtype="<f4", offset=16).astype(np.float64).reshape(h, w, c)


def load_image(path) -> np.ndarray:
    """Load an 8-bit image as (H, W, C) float64 on the 0-255 scale."""
    try:
        with Image.open(path) as im:
            if im.mode in ("I", "I;16", "F"):
                raise FormatError(f"{path}: only 8-bit images are supported")
            if im.mode == "L":
                arr = np.asarray(im, dtype=np.uint8)[:, :, None]
            elif im.mode == "RGB":
                arr = np.asarray(im, dtype=np.uint8)
            elif im.mode in ("1", "P", "LA", "RGBA"):
                conv = im.convert("L" if im.mode == "1" else "RGB")
                arr = np.asarray(conv, dtype=np.uint8)
                if arr.ndim == 2:
                    arr = arr[:, :, None]
            else:
                raise FormatError(f"{path}: unsupported image mode {im.mode!r}")
    except UnidentifiedImageError as exc:
        raise FormatError(f"{path}: not a recognized image file") from exc
    return arr.astype(np.float64)


def save_image(path, arr: np.ndarray) -> None:
    """Round, clamp, and write an 8-bit image; C must match the format."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise DimsError(f"expected (H, W, 1|3) image, got shape {arr.shape}")
    c = arr.shape[2]
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm" and c != 1:
        raise FormatError("PGM stores a single band; use PPM or PNG")
    if suffix == ".ppm" and c != 3:
        raise FormatError("PPM stores three bands; use PGM or PNG")
    quant = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
    if c == 1:
        Image.fromarray(quant[:, :, 0], mode="L").save(path)
    else:
        Image.fromarray(quant, mode="RGB").save(path)
