"""Seeded distortions: the common pool and two malicious-edit surrogates.

Every distortion maps an ``(H, W, 3)`` uint8 image to another of the same
shape.  Randomness comes only from ``DistortionSpec.seed``.

The malicious surrogates stand in for face-swap / attribute-edit generators:
both destroy the high-frequency chroma content of the face region while
keeping the global appearance.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from PIL import Image
from scipy.ndimage import correlate1d, median_filter

from . import dtcwt
from .image import YuvImage, check_image, rgb_to_yuv, yuv_to_rgb


class Kind(str, Enum):
    IDENTITY = "Identity"
    JPEG = "JpegTest"
    RESIZE = "Resize"
    GAUSSIAN_BLUR = "GaussianBlur"
    MEDIAN_BLUR = "MedianBlur"
    DROPOUT = "Dropout"
    SALT_PEPPER = "SaltPepper"
    GAUSSIAN_NOISE = "GaussianNoise"
    SUBBAND_SCRAMBLE = "SubbandScramble"
    REGION_REGENERATE = "RegionRegenerate"


COMMON_KINDS = (Kind.IDENTITY, Kind.JPEG, Kind.RESIZE, Kind.GAUSSIAN_BLUR, Kind.MEDIAN_BLUR,
                Kind.DROPOUT, Kind.SALT_PEPPER, Kind.GAUSSIAN_NOISE)
MALICIOUS_KINDS = (Kind.SUBBAND_SCRAMBLE, Kind.REGION_REGENERATE)

DEFAULT_PARAMS: dict[Kind, dict[str, float]] = {
    Kind.IDENTITY: {},
    Kind.JPEG: {"q": 50},
    Kind.RESIZE: {"s": 0.5},
    Kind.GAUSSIAN_BLUR: {"sigma": 1.0, "k": 5},
    Kind.MEDIAN_BLUR: {"k": 3},
    Kind.DROPOUT: {"p": 0.3},
    Kind.SALT_PEPPER: {"p": 0.01},
    Kind.GAUSSIAN_NOISE: {"sigma": 5.0},
    Kind.SUBBAND_SCRAMBLE: {"region": 1.0, "level": 2, "iters": 40},
    Kind.REGION_REGENERATE: {"region": 1.0, "sigma": 4.0, "noise": 3.0},
}

ALIASES = {
    "identity": Kind.IDENTITY, "id": Kind.IDENTITY,
    "jpeg": Kind.JPEG, "jpegtest": Kind.JPEG,
    "resize": Kind.RESIZE,
    "blur": Kind.GAUSSIAN_BLUR, "gaussianblur": Kind.GAUSSIAN_BLUR, "gblur": Kind.GAUSSIAN_BLUR,
    "median": Kind.MEDIAN_BLUR, "medianblur": Kind.MEDIAN_BLUR,
    "dropout": Kind.DROPOUT,
    "saltpepper": Kind.SALT_PEPPER, "sp": Kind.SALT_PEPPER, "salt": Kind.SALT_PEPPER,
    "noise": Kind.GAUSSIAN_NOISE, "gaussiannoise": Kind.GAUSSIAN_NOISE, "gnoise": Kind.GAUSSIAN_NOISE,
    "scramble": Kind.SUBBAND_SCRAMBLE, "subbandscramble": Kind.SUBBAND_SCRAMBLE,
    "regen": Kind.REGION_REGENERATE, "regionregenerate": Kind.REGION_REGENERATE,
}
SHORT_NAMES = {
    Kind.IDENTITY: "identity", Kind.JPEG: "jpeg", Kind.RESIZE: "resize",
    Kind.GAUSSIAN_BLUR: "blur", Kind.MEDIAN_BLUR: "median", Kind.DROPOUT: "dropout",
    Kind.SALT_PEPPER: "saltpepper", Kind.GAUSSIAN_NOISE: "noise",
    Kind.SUBBAND_SCRAMBLE: "scramble", Kind.REGION_REGENERATE: "regen",
}


class DistortionError(ValueError):
    pass


@dataclass(frozen=True)
class DistortionSpec:
    kind: Kind
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        kind = Kind(self.kind)
        merged = {**DEFAULT_PARAMS[kind], **self.params}
        unknown = set(merged) - set(DEFAULT_PARAMS[kind])
        if unknown:
            raise DistortionError(f"{kind.value}: unknown parameter(s) {sorted(unknown)}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", merged)
        _validate(kind, merged)

    @property
    def malicious(self) -> bool:
        return self.kind in MALICIOUS_KINDS

    @property
    def label(self) -> str:
        """Canonical text form, e.g. ``jpeg:q=50``; parses back to an equal spec."""
        name = SHORT_NAMES[self.kind]
        if not self.params:
            return name
        args = ",".join(f"{k}={_fmt(v)}" for k, v in sorted(self.params.items()))
        return f"{name}:{args}"

    def with_seed(self, seed: int) -> "DistortionSpec":
        return DistortionSpec(self.kind, dict(self.params), seed)


def _fmt(v) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def _validate(kind: Kind, p: dict) -> None:
    def need(cond, msg):
        if not cond:
            raise DistortionError(f"{kind.value}: {msg}")

    if kind is Kind.JPEG:
        need(10 <= p["q"] <= 95, "quality q must be in [10, 95]")
    elif kind is Kind.RESIZE:
        need(0.25 <= p["s"] <= 2.0, "scale s must be in [0.25, 2]")
    elif kind is Kind.GAUSSIAN_BLUR:
        need(p["sigma"] > 0, "sigma must be > 0")
        need(float(p["k"]).is_integer() and p["k"] >= 3 and int(p["k"]) % 2 == 1, "k must be odd and >= 3")
    elif kind is Kind.MEDIAN_BLUR:
        need(float(p["k"]).is_integer() and p["k"] >= 3 and int(p["k"]) % 2 == 1, "k must be odd and >= 3")
    elif kind in (Kind.DROPOUT, Kind.SALT_PEPPER):
        need(0 < p["p"] < 1, "probability p must be in (0, 1)")
    elif kind is Kind.GAUSSIAN_NOISE:
        need(p["sigma"] > 0, "sigma must be > 0")
    elif kind is Kind.SUBBAND_SCRAMBLE:
        need(0 < p["region"] <= 1, "region must be in (0, 1]")
        need(p["level"] in (1, 2), "level must be 1 or 2")
        need(float(p["iters"]).is_integer() and 1 <= p["iters"] <= 200, "iters must be an integer in [1, 200]")
    elif kind is Kind.REGION_REGENERATE:
        need(0 < p["region"] <= 1, "region must be in (0, 1]")
        need(p["sigma"] > 0 and p["noise"] >= 0, "sigma must be > 0 and noise >= 0")


def parse(text: str, seed: int = 0) -> DistortionSpec:
    """Parse ``name[:key=value,...]``, e.g. ``jpeg:q=50`` or ``scramble:region=0.6``."""
    name, _, rest = text.strip().partition(":")
    kind = ALIASES.get(name.strip().lower())
    if kind is None:
        raise DistortionError(f"unknown distortion {name!r}")
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise DistortionError(f"malformed parameter {item!r} (expected key=value)")
        try:
            params[key.strip()] = float(value)
        except ValueError:
            raise DistortionError(f"non-numeric value in {item!r}") from None
    return DistortionSpec(kind, params, seed)


def parse_list(text: str, seed: int = 0) -> list[DistortionSpec]:
    """Parse a ``;``-separated list of distortion strings."""
    return [parse(t, seed) for t in text.split(";") if t.strip()]


def common_pool(seed: int = 0) -> list[DistortionSpec]:
    return [DistortionSpec(k, seed=seed) for k in COMMON_KINDS]


def malicious_pool(seed: int = 0) -> list[DistortionSpec]:
    return [DistortionSpec(k, seed=seed) for k in MALICIOUS_KINDS]


def central_box(h: int, w: int, frac: float) -> tuple[slice, slice]:
    bh, bw = max(1, round(h * frac)), max(1, round(w * frac))
    top, left = (h - bh) // 2, (w - bw) // 2
    return slice(top, top + bh), slice(left, left + bw)


def _to_u8(x: np.ndarray) -> np.ndarray:
    return np.floor(np.clip(x, 0, 255) + 0.5).astype(np.uint8)


def _gaussian_kernel(sigma: float, k: int) -> np.ndarray:
    r = np.arange(k) - k // 2
    g = np.exp(-(r ** 2) / (2 * sigma ** 2))
    return g / g.sum()


def gaussian_blur(x: np.ndarray, sigma: float, k: int) -> np.ndarray:
    g = _gaussian_kernel(sigma, k)
    out = correlate1d(x.astype(float), g, axis=0, mode="reflect")
    return correlate1d(out, g, axis=1, mode="reflect")


def _jpeg(img, q):
    buf = io.BytesIO()
    Image.fromarray(img).save(buf, format="JPEG", quality=int(q), subsampling=2, optimize=False)
    buf.seek(0)
    with Image.open(buf) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()


def _resize(img, s):
    h, w = img.shape[:2]
    small = (max(1, int(np.floor(s * w))), max(1, int(np.floor(s * h))))
    im = Image.fromarray(img).resize(small, Image.BILINEAR).resize((w, h), Image.BILINEAR)
    return np.asarray(im, dtype=np.uint8).copy()


SCRAMBLE_BANDS = (1, 3)
SCRAMBLE_STEP = 1.5


def _scramble(img, region, level, iters, rng):
    # Sign-flipping the coefficients and inverting is not enough: the transform
    # is redundant, so the other bands re-project most of the old content back
    # into the flipped ones.  Instead solve for a U plane whose analysis in the
    # target bands *is* the flipped set (Landweber iterations, synthesis as the
    # approximate adjoint).
    yuv = rgb_to_yuv(img)
    h, w = yuv.shape
    u = dtcwt.pad_to_even(yuv.u)
    dec = dtcwt.forward(u, levels=2)
    target = {}
    for d in SCRAMBLE_BANDS:
        band = dtcwt.subband(dec, level, d).copy()
        rs, cs = central_box(*band.shape, region)
        band[rs, cs] *= rng.choice([-1.0, 1.0], size=band[rs, cs].shape)
        target[d] = band
    for _ in range(int(iters)):
        cur = dtcwt.forward(u, levels=2)
        res = dtcwt.Decomposition(np.zeros_like(cur.low), [np.zeros_like(b) for b in cur.highs], cur.shape)
        for d, t in target.items():
            res.highs[level - 1][..., d - 1] = t - dtcwt.subband(cur, level, d)
        u = u + SCRAMBLE_STEP * dtcwt.inverse(res)
    return yuv_to_rgb(YuvImage(yuv.y, u[:h, :w], yuv.v))


def _regenerate(img, region, sigma, noise, rng):
    out = img.astype(float)
    rs, cs = central_box(*img.shape[:2], region)
    k = 2 * int(np.ceil(3 * sigma)) + 1
    patch = gaussian_blur(out, sigma, k)[rs, cs]
    if noise > 0:
        patch = patch + rng.normal(0.0, noise, size=patch.shape)
    out[rs, cs] = patch
    return _to_u8(out)


def apply(img: np.ndarray, spec: DistortionSpec, original: np.ndarray | None = None) -> np.ndarray:
    """Apply one distortion.  ``original`` (the unwatermarked cover) is required for Dropout."""
    img = check_image(img)
    p = spec.params
    rng = np.random.default_rng(spec.seed)
    kind = spec.kind
    if kind is Kind.IDENTITY:
        return img.copy()
    if kind is Kind.JPEG:
        return _jpeg(img, p["q"])
    if kind is Kind.RESIZE:
        return _resize(img, p["s"])
    if kind is Kind.GAUSSIAN_BLUR:
        return _to_u8(gaussian_blur(img, p["sigma"], int(p["k"])))
    if kind is Kind.MEDIAN_BLUR:
        k = int(p["k"])
        return median_filter(img, size=(k, k, 1), mode="reflect")
    if kind is Kind.DROPOUT:
        if original is None:
            raise DistortionError("Dropout needs the original image")
        original = check_image(original)
        if original.shape != img.shape:
            raise DistortionError("original and image shapes differ")
        keep_orig = rng.random(img.shape[:2]) < p["p"]
        return np.where(keep_orig[..., None], original, img)
    if kind is Kind.SALT_PEPPER:
        hit = rng.random(img.shape[:2]) < p["p"]
        value = np.where(rng.random(img.shape[:2]) < 0.5, 0, 255).astype(np.uint8)
        out = img.copy()
        out[hit] = value[hit][:, None]
        return out
    if kind is Kind.GAUSSIAN_NOISE:
        return _to_u8(img + rng.normal(0.0, p["sigma"], size=img.shape))
    if kind is Kind.SUBBAND_SCRAMBLE:
        return _scramble(img, p["region"], int(p["level"]), int(p["iters"]), rng)
    if kind is Kind.REGION_REGENERATE:
        return _regenerate(img, p["region"], p["sigma"], p["noise"], rng)
    raise DistortionError(f"unhandled kind {kind}")  # pragma: no cover


class Pool:
    """Deterministic sampler over a list of specs.

    ``mode="cycle"`` walks the list round-robin; ``mode="uniform"`` draws
    uniformly with a seeded generator.
    """

    def __init__(self, specs, seed: int = 0, mode: str = "uniform"):
        self.specs = list(specs)
        if not self.specs:
            raise DistortionError("pool needs at least one distortion")
        if mode not in ("uniform", "cycle"):
            raise DistortionError(f"unknown sampling mode {mode!r}")
        self.mode = mode
        self._rng = np.random.default_rng(seed)
        self._i = 0

    def __iter__(self):
        return self

    def __next__(self) -> DistortionSpec:
        if self.mode == "cycle":
            spec = self.specs[self._i % len(self.specs)]
            self._i += 1
            return spec
        return self.specs[int(self._rng.integers(len(self.specs)))]

    def draw(self, n: int) -> list[DistortionSpec]:
        return [next(self) for _ in range(n)]


def pool(specs, seed: int = 0, mode: str = "uniform") -> Pool:
    return Pool(specs, seed, mode)
