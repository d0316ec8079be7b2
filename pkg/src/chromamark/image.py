"""Raster helpers: BT.601 colour conversion, PSNR/SSIM and PNG I/O.

Images are ``uint8`` arrays of shape ``(H, W, 3)``.  Chroma planes are
zero-centred, so ``U`` and ``V`` span roughly ``[-128, 128]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy.ndimage import correlate1d

# BT.601 full range (JFIF).  Rows give Y, U, V from R, G, B.
RGB_TO_YUV = np.array([
    [0.299, 0.587, 0.114],
    [-0.168735892, -0.331264108, 0.5],
    [0.5, -0.418687589, -0.081312411],
])
YUV_TO_RGB = np.linalg.inv(RGB_TO_YUV)

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


class ImageFormatError(ValueError):
    """Raised for images that are not 8-bit RGB/RGBA/grayscale rasters."""


@dataclass(frozen=True)
class YuvImage:
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if not (self.y.shape == self.u.shape == self.v.shape):
            raise ValueError("Y, U and V planes must share one shape")

    @property
    def shape(self) -> tuple[int, int]:
        return self.y.shape


def check_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"expected an (H, W, 3) raster, got shape {img.shape}")
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 pixels, got {img.dtype}")
    return img


def rgb_to_yuv(img: np.ndarray) -> YuvImage:
    rgb = check_image(img).astype(float)
    yuv = rgb @ RGB_TO_YUV.T
    return YuvImage(yuv[..., 0], yuv[..., 1], yuv[..., 2])


def yuv_to_rgb_float(yuv: YuvImage) -> np.ndarray:
    """Inverse conversion without clamping or rounding."""
    return np.stack([yuv.y, yuv.u, yuv.v], axis=-1) @ YUV_TO_RGB.T


def yuv_to_rgb(yuv: YuvImage) -> np.ndarray:
    """Inverse BT.601 with clamping to [0, 255] and round-half-up."""
    rgb = yuv_to_rgb_float(yuv)
    return np.floor(np.clip(rgb, 0.0, 255.0) + 0.5).astype(np.uint8)


def luma(img: np.ndarray) -> np.ndarray:
    return check_image(img).astype(float) @ RGB_TO_YUV[0]


def _same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if check_image(a).shape != check_image(b).shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")


def mse(a: np.ndarray, b: np.ndarray) -> float:
    _same_shape(a, b)
    return float(np.mean((a.astype(float) - b.astype(float)) ** 2))


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """PSNR in dB over all RGB channels; ``math.inf`` for identical images."""
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / err)


def _gaussian_window() -> np.ndarray:
    r = np.arange(SSIM_WINDOW) - SSIM_WINDOW // 2
    g = np.exp(-(r ** 2) / (2 * SSIM_SIGMA ** 2))
    return g / g.sum()


def _filter_valid(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    pad = len(g) // 2
    y = correlate1d(correlate1d(x, g, axis=0), g, axis=1)
    return y[pad:-pad, pad:-pad]


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Single-scale SSIM on luma with an 11x11 Gaussian window (sigma 1.5).

    Averaged over window positions fully inside the image.
    """
    _same_shape(a, b)
    if min(a.shape[:2]) < SSIM_WINDOW:
        raise ValueError(f"image sides must be >= {SSIM_WINDOW} for SSIM")
    x, y = luma(a), luma(b)
    c1 = (0.01 * 255) ** 2
    c2 = (0.03 * 255) ** 2
    g = _gaussian_window()
    mx, my = _filter_valid(x, g), _filter_valid(y, g)
    sxx = _filter_valid(x * x, g) - mx * mx
    syy = _filter_valid(y * y, g) - my * my
    sxy = _filter_valid(x * y, g) - mx * my
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


def load_png(path) -> np.ndarray:
    """Read an 8-bit PNG as an RGB raster (alpha dropped, gray replicated)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    try:
        with Image.open(path) as im:
            if im.format != "PNG":
                raise ImageFormatError(f"{path}: not a PNG ({im.format})")
            if im.mode in ("I", "I;16", "I;16B", "I;16L", "F") or "16" in im.mode:
                raise ImageFormatError(f"{path}: unsupported bit depth (mode {im.mode})")
            if im.mode not in ("RGB", "RGBA", "L", "LA", "P", "1"):
                raise ImageFormatError(f"{path}: unsupported mode {im.mode}")
            im.load()
            rgb = im.convert("RGB")
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"{path}: malformed PNG") from exc
    except (OSError, SyntaxError) as exc:
        if isinstance(exc, FileNotFoundError):
            raise
        raise ImageFormatError(f"{path}: malformed PNG ({exc})") from exc
    return np.asarray(rgb, dtype=np.uint8).copy()


def save_png(img: np.ndarray, path) -> None:
    Image.fromarray(check_image(img)).save(Path(path), format="PNG")
