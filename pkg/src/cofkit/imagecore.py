"""Image rasters, 8-bit file I/O, and color-space conversions.

Images are plain numpy arrays: color is (H, W, 3) float64, gray is (H, W)
float64, both with samples in [0, 1]. Quantization to 8 bits happens only
at the file boundary so that iterated filtering never accumulates rounding
error. Supported files are 8-bit PNG (RGB/RGBA/gray/palette) and binary
PPM/PGM for reading; writing is always PNG.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image, UnidentifiedImageError


class DecodeError(Exception):
    """An image file could not be read as 8-bit PNG/PPM/PGM."""


class EncodeError(Exception):
    """An image could not be written to disk."""


# sRGB -> XYZ under D65 (IEC 61966-2-1 primaries). The white point is the
# matrix row sums so that (1,1,1) maps to exactly (100, 0, 0) in Lab.
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE = _RGB_TO_XYZ.sum(axis=1)

# Rec. 601 luma weights.
_LUMA = np.array([0.299, 0.587, 0.114])

# CIE Lab f() breakpoint: (6/29)^3.
_LAB_DELTA3 = (6.0 / 29.0) ** 3

_READ_MODES = {"1", "L", "LA", "P", "RGB", "RGBA"}


def load_image(path) -> np.ndarray:
    """Read an 8-bit PNG or binary PPM/PGM as an (H, W, 3) float image.

    Samples are mapped to [0, 1] by v/255; grayscale files replicate the
    single channel. Raises DecodeError for missing/undecodable files and
    for unsupported bit depths or modes.
    """
    try:
        with Image.open(path) as im:
            if im.format not in ("PNG", "PPM"):
                raise DecodeError(f"{path}: unsupported format {im.format!r}")
            if im.mode not in _READ_MODES:
                raise DecodeError(
                    f"{path}: unsupported mode/bit depth {im.mode!r} (8-bit only)"
                )
            if im.mode == "P":
                im = im.convert("RGBA" if "transparency" in im.info else "RGB")
            if im.mode == "1":
                im = im.convert("L")
            arr = np.asarray(im, dtype=np.float64) / 255.0
    except DecodeError:
        raise
    except (FileNotFoundError, UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"{path}: {exc}") from exc
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    elif arr.shape[2] == 2:  # LA: drop alpha, replicate luminance
        arr = np.repeat(arr[:, :, :1], 3, axis=2)
    elif arr.shape[2] == 4:  # RGBA: drop alpha
        arr = arr[:, :, :3]
    return np.ascontiguousarray(arr)


def encode_png(img: np.ndarray) -> bytes:
    """Encode a gray (H, W) or color (H, W, 3) [0,1] image as 8-bit PNG bytes."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim not in (2, 3) or (img.ndim == 3 and img.shape[2] != 3):
        raise ValueError(f"expected (H, W) or (H, W, 3) image, got {img.shape}")
    if not np.isfinite(img).all() or img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("samples must be finite and in [0, 1]")
    levels = to_levels(img).astype(np.uint8)
    mode = "L" if img.ndim == 2 else "RGB"
    buf = io.BytesIO()
    try:
        Image.fromarray(levels, mode=mode).save(buf, format="PNG")
    except (OSError, ValueError) as exc:
        raise EncodeError(str(exc)) from exc
    return buf.getvalue()


def save_image(img: np.ndarray, path) -> None:
    """Write a gray (H, W) or color (H, W, 3) [0,1] image as 8-bit PNG."""
    if not str(path).lower().endswith(".png"):
        raise EncodeError(f"{path}: only PNG output is supported")
    data = encode_png(img)
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise EncodeError(f"{path}: {exc}") from exc


def to_levels(img: np.ndarray) -> np.ndarray:
    """Integer 0-255 view of a [0,1] image: level = round(v*255), half up."""
    return np.floor(np.asarray(img) * 255.0 + 0.5).astype(np.int32)


def from_levels(levels: np.ndarray) -> np.ndarray:
    """Map integer levels 0-255 back to floating samples in [0, 1]."""
    return np.asarray(levels, dtype=np.float64) / 255.0


def rgb_to_gray(img: np.ndarray) -> np.ndarray:
    """Rec. 601 luma: 0.299 R + 0.587 G + 0.114 B, per pixel."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) color image, got {img.shape}")
    return img @ _LUMA


def rgb_to_lab(img: np.ndarray) -> np.ndarray:
    """Convert sRGB [0,1] to CIELAB (D65, standard gamma decoding).

    Returns an (H, W, 3) array of (L, a, b) with L in [0, 100] for
    in-gamut input. The conversion is pure and deterministic.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.shape[-1] != 3:
        raise ValueError(f"expected trailing channel axis of 3, got {img.shape}")
    linear = np.where(
        img > 0.04045, ((img + 0.055) / 1.055) ** 2.4, img / 12.92
    )
    xyz = linear @ _RGB_TO_XYZ.T
    t = xyz / _WHITE
    f = np.where(t > _LAB_DELTA3, np.cbrt(t), t / (3 * (6.0 / 29.0) ** 2) + 4.0 / 29.0)
    lab = np.empty_like(img)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared per-sample difference; shapes must match."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.mean(d * d))
