"""Keyed spread-spectrum embedding in DT-CWT chroma sub-bands.

Each message bit owns a disjoint, key-selected set of coefficient positions
in every embedding sub-band.  The bit's sign times a +/-1 pattern is added to
the real and imaginary parts of those coefficients, scaled by ``alpha`` and a
texture mask, and the U plane is resynthesised.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from . import dtcwt
from .image import YuvImage, check_image, rgb_to_yuv, yuv_to_rgb_float

MIN_SUPPORT = 64          # real coefficients (Re and Im both count) per bit
MIN_IMAGE_SIDE = 64
DEFAULT_ALPHA = 8.0       # level 2, mask off: ~41.6 dB on the desk corpus
DEFAULT_MASK_FLOOR = 0.1
MASK_PERCENTILE = 99.0


class CapacityError(ValueError):
    """The sub-band is too small to give every bit its minimum support."""


# -- messages and keys -------------------------------------------------------

def message_from_bits(text: str) -> np.ndarray:
    text = text.strip()
    if not text or set(text) - {"0", "1"}:
        raise ValueError(f"not a bit string: {text!r}")
    return np.array([c == "1" for c in text], dtype=np.uint8)


def message_from_hex(text: str, length: int | None = None) -> np.ndarray:
    """Big-endian bits of a hex string, optionally fitted to ``length``.

    A longer ``length`` zero-extends on the left.  A shorter one drops leading
    bits, which must then be zero.
    """
    text = text.strip().lower().removeprefix("0x")
    if not text or not re.fullmatch(r"[0-9a-f]+", text):
        raise ValueError(f"not a hex string: {text!r}")
    bits = np.array([int(b) for b in bin(int(text, 16))[2:].zfill(4 * len(text))], dtype=np.uint8)
    if length is None:
        return bits
    if length > bits.size:
        return np.concatenate([np.zeros(length - bits.size, np.uint8), bits])
    if bits[:bits.size - length].any():
        raise ValueError(f"hex value does not fit in {length} bits")
    return bits[bits.size - length:]


def parse_message(text: str, length: int | None = None) -> np.ndarray:
    """Accept ``0b``-less bit strings or hex (``0x`` prefix or any non-binary hex digit)."""
    t = text.strip().lower()
    if t.startswith("0x") or (set(t) - {"0", "1"}):
        return message_from_hex(t, length)
    bits = message_from_bits(t)
    if length is not None and bits.size != length:
        raise ValueError(f"message has {bits.size} bits, expected {length}")
    return bits


def bits_to_str(bits) -> str:
    return "".join("1" if b else "0" for b in np.asarray(bits).ravel())


def bits_to_hex(bits) -> str:
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    pad = (-bits.size) % 4
    s = bits_to_str(np.concatenate([np.zeros(pad, np.uint8), bits]))
    return "".join(f"{int(s[i:i + 4], 2):x}" for i in range(0, len(s), 4))


def random_message(length: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).integers(0, 2, length).astype(np.uint8)


def parse_key(text: str) -> int:
    """A key is exactly 16 hex digits (64 bits)."""
    t = text.strip().lower().removeprefix("0x")
    if not re.fullmatch(r"[0-9a-f]{16}", t):
        raise ValueError(f"key must be 16 hex digits, got {text!r}")
    return int(t, 16)


def format_key(key: int) -> str:
    return f"{key & 0xFFFFFFFFFFFFFFFF:016x}"


def check_bits(bits) -> np.ndarray:
    b = np.asarray(bits)
    if b.ndim != 1 or b.size == 0:
        raise ValueError("message must be a non-empty 1-D bit sequence")
    if not np.isin(b, (0, 1)).all():
        raise ValueError("message bits must be 0 or 1")
    return b.astype(np.uint8)


# -- carriers, mask, embedding ------------------------------------------------

def capacity(shape, l: int) -> int:
    """Real coefficients of support per bit for an ``(h, w)`` complex sub-band."""
    h, w = shape
    return 2 * ((h * w) // l) if l > 0 else 0


def derive_carriers(key: int, l: int, shape, subband_id: int) -> np.ndarray:
    """Carriers of shape ``(l, h, w)``: bit ``i`` owns a disjoint random set
    of ``h*w // l`` positions holding +/-1; everything else is 0."""
    h, w = shape
    if l < 1:
        raise ValueError("message length must be >= 1")
    if capacity(shape, l) < MIN_SUPPORT:
        raise CapacityError(
            f"{h}x{w} sub-band gives {capacity(shape, l)} coefficients per bit for l={l}; "
            f"need >= {MIN_SUPPORT}")
    n = h * w
    k = n // l
    ss = np.random.SeedSequence([key & 0xFFFFFFFFFFFFFFFF, subband_id, l, h, w])
    rng = np.random.default_rng(ss)
    perm = rng.permutation(n)
    signs = rng.choice(np.array([-1.0, 1.0]), size=n)
    out = np.zeros((l, n))
    idx = perm[:l * k].reshape(l, k)
    np.put_along_axis(out, idx, signs[idx], axis=1)
    return out.reshape(l, h, w)


def attention_mask(sub: np.ndarray) -> np.ndarray:
    """Texture mask: 3x3 mean of |coef| over its 99th percentile, clipped to [0, 1]."""
    sub = np.asarray(sub)
    if sub.size == 0:
        raise ValueError("empty sub-band")
    local = uniform_filter(np.abs(sub).astype(float), size=3, mode="reflect")
    ref = np.percentile(local, MASK_PERCENTILE)
    if ref <= 0:
        return np.zeros_like(local)
    return np.clip(local / ref, 0.0, 1.0)


def spread(bits, carriers: np.ndarray) -> np.ndarray:
    """Sum of signed carriers; bit 1 -> +C, bit 0 -> -C."""
    sigma = 2.0 * check_bits(bits) - 1.0
    if sigma.size != carriers.shape[0]:
        raise ValueError(f"{sigma.size} bits but {carriers.shape[0]} carriers")
    return np.tensordot(sigma, carriers, axes=1)


def embed_subband(u: np.ndarray, bits, carriers: np.ndarray, mask, alpha: float) -> np.ndarray:
    u = np.asarray(u)
    if carriers.shape[1:] != u.shape:
        raise ValueError(f"carrier shape {carriers.shape[1:]} != sub-band shape {u.shape}")
    mask = np.broadcast_to(np.asarray(mask, dtype=float), u.shape)
    w = alpha * mask * spread(bits, carriers)
    return u + w + 1j * w


@dataclass(frozen=True)
class EmbedConfig:
    alpha: float = DEFAULT_ALPHA
    level: int = 2
    embed_subbands: tuple = (1, 3)
    message_length: int = 30
    mask_enabled: bool = False
    mask_floor: float = DEFAULT_MASK_FLOOR

    def __post_init__(self):
        object.__setattr__(self, "embed_subbands", tuple(sorted(set(self.embed_subbands))))
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if self.level not in (1, 2):
            raise ValueError("level must be 1 or 2")
        if not self.embed_subbands or not set(self.embed_subbands) <= set(range(1, 7)):
            raise ValueError("embed_subbands must be a non-empty subset of 1..6")
        if self.message_length < 1:
            raise ValueError("message_length must be >= 1")
        if not 0 <= self.mask_floor <= 1:
            raise ValueError("mask_floor must be in [0, 1]")


@dataclass
class EmbedResult:
    image: np.ndarray
    clamped: int          # pixel positions where any channel left [0, 255]

    @property
    def clamped_fraction(self) -> float:
        return self.clamped / (self.image.shape[0] * self.image.shape[1])


def check_size(shape) -> None:
    h, w = shape[:2]
    if h % 2 or w % 2:
        raise ValueError(f"image sides must be even, got {h}x{w}")
    if min(h, w) < MIN_IMAGE_SIDE:
        raise ValueError(f"image sides must be >= {MIN_IMAGE_SIDE}, got {h}x{w}")


def embed_plane(u: np.ndarray, bits, key: int, cfg: EmbedConfig) -> np.ndarray:
    """Embed into a U plane and return the new plane (float)."""
    bits = check_bits(bits)
    if bits.size != cfg.message_length:
        raise ValueError(f"message has {bits.size} bits, config expects {cfg.message_length}")
    dec = dtcwt.forward(u, levels=2)
    for d in cfg.embed_subbands:
        band = dtcwt.subband(dec, cfg.level, d)
        car = derive_carriers(key, cfg.message_length, band.shape, d)
        if cfg.mask_enabled:
            mask = np.maximum(attention_mask(band), cfg.mask_floor)
        else:
            mask = 1.0
        dec.highs[cfg.level - 1][..., d - 1] = embed_subband(band, bits, car, mask, cfg.alpha)
    return dtcwt.inverse(dec)


def embed_image_report(img: np.ndarray, bits, key: int, cfg: EmbedConfig = EmbedConfig()) -> EmbedResult:
    img = check_image(img)
    check_size(img.shape)
    yuv = rgb_to_yuv(img)
    u = embed_plane(yuv.u, bits, key, cfg)
    rgb = yuv_to_rgb_float(YuvImage(yuv.y, u, yuv.v))
    clamped = int(np.count_nonzero(((rgb < -0.5) | (rgb >= 255.5)).any(axis=-1)))
    out = np.floor(np.clip(rgb, 0.0, 255.0) + 0.5).astype(np.uint8)
    return EmbedResult(out, clamped)


def embed_image(img: np.ndarray, bits, key: int, cfg: EmbedConfig = EmbedConfig()) -> np.ndarray:
    return embed_image_report(img, bits, key, cfg).image
