"""Two-level 2-D dual-tree complex wavelet transform.

Level 1 uses the near-symmetric 13/19-tap biorthogonal pair, level 2 the
18-tap quarter-sample-shift orthonormal pair.  Both sets are the
published ``near_sym_b`` and ``qshift_d`` coefficients.  Boundaries use
symmetric extension with repeated end samples.

All routines accept arrays of shape ``(..., H, W)`` so stacks of planes are
transformed in one call.

Direction index ``d`` (1..6) maps to orientations 15, 45, 75, 105, 135, 165
degrees.  The orientation is that of the stripes (edges) a band responds
to, measured counter-clockwise from the +x (column) axis with +y pointing
*up* the image; the passed frequency vector is perpendicular to it.  Bands ``(1, 6)``, ``(2, 5)`` and ``(3, 4)`` are
the three quadrature pairs built from the same four real trees.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ORIENTATIONS = (15, 45, 75, 105, 135, 165)
MIN_SIDE = 16

# near_sym_b: level-1 biorthogonal analysis/synthesis.
H0O = np.array([
    -0.0017578125, 0.0, 0.022265625, -0.046875, -0.0482421875, 0.296875,
    0.55546875, 0.296875, -0.0482421875, -0.046875, 0.022265625, 0.0,
    -0.0017578125,
])
G0O = np.array([
    7.062639508928571e-05, 0.0, -0.0013419015066964285, -0.0018833705357142855,
    0.007156808035714285, 0.023856026785714284, -0.05564313616071428,
    -0.05168805803571428, 0.29975760323660716, 0.5594308035714286,
    0.29975760323660716, -0.05168805803571428, -0.05564313616071428,
    0.023856026785714284, 0.007156808035714285, -0.0018833705357142855,
    -0.0013419015066964285, 0.0, 7.062639508928571e-05,
])
H1O = G0O * np.array([(-1) ** (k + 1) for k in range(19)])
G1O = H0O * np.array([(-1) ** k for k in range(13)])

# qshift_d: level-2 Q-shift, tree b is tree a reversed.
H0A = np.array([
    -0.002284127440270531, 0.0012098941630734423, -0.011834794515430786,
    0.0012834569993443994, 0.044365221606616996, -0.05327610880304726,
    -0.1133058863621428, 0.2809028632221865, 0.7528160380878561,
    0.5658080673964587, 0.024550152433666563, -0.12018854471079482,
    0.018156493945546453, 0.03152637712208465, -0.006628794612430063,
    -0.0025761743066007948, 0.0012775586538069982, 0.002411869456666278,
])
H0B = H0A[::-1].copy()
H1A = H0B * np.array([(-1) ** k for k in range(18)])
H1B = H1A[::-1].copy()
G0A, G0B = H0B.copy(), H0A.copy()
G1A, G1B = H1B.copy(), H1A.copy()


@dataclass(frozen=True)
class FilterBank:
    h0o: np.ndarray
    h1o: np.ndarray
    g0o: np.ndarray
    g1o: np.ndarray
    h0a: np.ndarray
    h0b: np.ndarray
    h1a: np.ndarray
    h1b: np.ndarray
    g0a: np.ndarray
    g0b: np.ndarray
    g1a: np.ndarray
    g1b: np.ndarray

    def perturbed(self, name: str, index: int, delta: float) -> "FilterBank":
        """Copy with one coefficient nudged; a negative control for self-tests."""
        arr = getattr(self, name).copy()
        arr[index] += delta
        return FilterBank(**{**self.__dict__, name: arr})


DEFAULT_BANK = FilterBank(H0O, H1O, G0O, G1O, H0A, H0B, H1A, H1B, G0A, G0B, G1A, G1B)


@dataclass
class Decomposition:
    """Output of :func:`forward`.

    ``highs[j]`` has shape ``(..., h_j, w_j, 6)`` (complex) for level ``j+1``.
    ``low`` is the real low-pass residual of the coarsest level.
    """

    low: np.ndarray
    highs: list[np.ndarray]
    shape: tuple[int, int]

    @property
    def levels(self) -> int:
        return len(self.highs)

    def copy(self) -> "Decomposition":
        return Decomposition(self.low.copy(), [h.copy() for h in self.highs], self.shape)


def _reflect(idx: np.ndarray, n: int) -> np.ndarray:
    # mirror about -0.5 and n-0.5 (end samples repeated)
    period = 2 * n
    m = np.mod(idx, period)
    return np.where(m >= n, period - 1 - m, m)


def _conv_valid(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """True convolution along axis -1, keeping only fully overlapped outputs."""
    m = len(h)
    out_len = x.shape[-1] - m + 1
    y = np.zeros(x.shape[:-1] + (out_len,), dtype=x.dtype)
    for k in range(m):
        if h[m - 1 - k] != 0.0:
            y += h[m - 1 - k] * x[..., k:k + out_len]
    return y


def _colfilter(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    # odd-length filter, no decimation, along axis -1
    n = x.shape[-1]
    m2 = len(h) // 2
    xe = x[..., _reflect(np.arange(-m2, n + m2), n)]
    return _conv_valid(xe, h)


def _coldfilt(x: np.ndarray, ha: np.ndarray, hb: np.ndarray) -> np.ndarray:
    # decimate-by-two Q-shift filtering along axis -1; n must be a multiple of 4
    n = x.shape[-1]
    if n % 4:
        raise ValueError("length along filtered axis must be a multiple of 4")
    m = len(ha)
    xe = _reflect(np.arange(-m, n + m), n)
    t = np.arange(5, n + 2 * m - 2, 4)
    y = np.zeros(x.shape[:-1] + (n // 2,), dtype=x.dtype)
    if np.sum(ha * hb) > 0:
        s1, s2 = slice(0, None, 2), slice(1, None, 2)
    else:
        s1, s2 = slice(1, None, 2), slice(0, None, 2)
    y[..., s1] = _conv_valid(x[..., xe[t - 1]], ha[0::2]) + _conv_valid(x[..., xe[t - 3]], ha[1::2])
    y[..., s2] = _conv_valid(x[..., xe[t]], hb[0::2]) + _conv_valid(x[..., xe[t - 2]], hb[1::2])
    return y


def _colifilt(x: np.ndarray, ha: np.ndarray, hb: np.ndarray) -> np.ndarray:
    # interpolate-by-two Q-shift synthesis along axis -1
    n = x.shape[-1]
    m = len(ha)
    m2 = m // 2
    y = np.zeros(x.shape[:-1] + (2 * n,), dtype=x.dtype)
    xe = _reflect(np.arange(-m2, n + m2), n)
    hao, hae, hbo, hbe = ha[0::2], ha[1::2], hb[0::2], hb[1::2]
    swap = np.sum(ha * hb) <= 0
    if m2 % 2 == 0:
        t = np.arange(3, n + m, 2)
        ta, tb = (t - 1, t) if swap else (t, t - 1)
        y[..., 0::4] = _conv_valid(x[..., xe[tb - 2]], hae)
        y[..., 1::4] = _conv_valid(x[..., xe[ta - 2]], hbe)
        y[..., 2::4] = _conv_valid(x[..., xe[tb]], hao)
        y[..., 3::4] = _conv_valid(x[..., xe[ta]], hbo)
    else:
        t = np.arange(2, n + m - 1, 2)
        ta, tb = (t - 1, t) if swap else (t, t - 1)
        y[..., 0::4] = _conv_valid(x[..., xe[tb]], hao)
        y[..., 1::4] = _conv_valid(x[..., xe[ta]], hbo)
        y[..., 2::4] = _conv_valid(x[..., xe[tb]], hae)
        y[..., 3::4] = _conv_valid(x[..., xe[ta]], hbe)
    return y


def _cols(fn, x, *h):
    # filter along axis -2 (down the columns)
    return np.swapaxes(fn(np.swapaxes(x, -1, -2), *h), -1, -2)


def _q2c(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split 2x2 quads of four real trees into a pair of complex bands."""
    s = np.sqrt(0.5)
    p = (y[..., 0::2, 0::2] + 1j * y[..., 0::2, 1::2]) * s
    q = (y[..., 1::2, 1::2] - 1j * y[..., 1::2, 0::2]) * s
    return p - q, p + q


def _c2q(z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
    s = np.sqrt(0.5)
    p = (z1 + z2) * s
    q = (z1 - z2) * s
    h, w = z1.shape[-2:]
    x = np.zeros(z1.shape[:-2] + (2 * h, 2 * w))
    x[..., 0::2, 0::2] = p.real
    x[..., 0::2, 1::2] = p.imag
    x[..., 1::2, 0::2] = q.imag
    x[..., 1::2, 1::2] = -q.real
    return x


def _pack(hor, diag, vert) -> np.ndarray:
    # band order: 15, 45, 75, 105, 135, 165
    return np.stack([hor[0], diag[0], vert[0], vert[1], diag[1], hor[1]], axis=-1)


def forward(plane: np.ndarray, levels: int = 2, bank: FilterBank = DEFAULT_BANK) -> Decomposition:
    """Decompose ``plane`` (shape ``(..., H, W)``) into ``levels`` levels."""
    x = np.asarray(plane, dtype=float)
    if x.ndim < 2:
        raise ValueError("plane must be at least 2-D")
    h, w = x.shape[-2:]
    if h % 2 or w % 2:
        raise ValueError(f"plane sides must be even, got {h}x{w}")
    if min(h, w) < MIN_SIDE:
        raise ValueError(f"plane sides must be >= {MIN_SIDE}, got {h}x{w}")
    if levels not in (1, 2):
        raise ValueError("levels must be 1 or 2")
    b = bank

    lo = _cols(_colfilter, x, b.h0o)
    hi = _cols(_colfilter, x, b.h1o)
    lolo = _colfilter(lo, b.h0o)
    highs = [_pack(_q2c(_colfilter(hi, b.h0o)),
                   _q2c(_colfilter(hi, b.h1o)),
                   _q2c(_colfilter(lo, b.h1o)))]

    if levels == 2:
        if lolo.shape[-2] % 4:
            lolo = np.concatenate([lolo[..., :1, :], lolo, lolo[..., -1:, :]], axis=-2)
        if lolo.shape[-1] % 4:
            lolo = np.concatenate([lolo[..., :1], lolo, lolo[..., -1:]], axis=-1)
        lo = _cols(_coldfilt, lolo, b.h0b, b.h0a)
        hi = _cols(_coldfilt, lolo, b.h1b, b.h1a)
        lolo = _coldfilt(lo, b.h0b, b.h0a)
        highs.append(_pack(_q2c(_coldfilt(hi, b.h0b, b.h0a)),
                           _q2c(_coldfilt(hi, b.h1b, b.h1a)),
                           _q2c(_coldfilt(lo, b.h1b, b.h1a))))
    return Decomposition(lolo, highs, (h, w))


def _split(band: np.ndarray):
    return (_c2q(band[..., 0], band[..., 5]),
            _c2q(band[..., 2], band[..., 3]),
            _c2q(band[..., 1], band[..., 4]))


def inverse(dec: Decomposition, bank: FilterBank = DEFAULT_BANK) -> np.ndarray:
    """Reconstruct the plane from a (possibly modified) decomposition."""
    b = bank
    h, w = dec.shape
    expected = [(h // 2, w // 2)]
    if dec.levels == 2:
        h1, w1 = h + (h % 4 and 2), w + (w % 4 and 2)
        expected.append((h1 // 4, w1 // 4))
    for band, exp in zip(dec.highs, expected):
        if band.shape[-3:-1] != exp or band.shape[-1] != 6:
            raise ValueError(f"sub-band shape {band.shape[-3:]} inconsistent with plane {dec.shape}")

    z = np.asarray(dec.low, dtype=float)
    if dec.levels == 2:
        lh, hl, hh = _split(dec.highs[1])
        y1 = _cols(_colifilt, z, b.g0b, b.g0a) + _cols(_colifilt, lh, b.g1b, b.g1a)
        y2 = _cols(_colifilt, hl, b.g0b, b.g0a) + _cols(_colifilt, hh, b.g1b, b.g1a)
        z = _colifilt(y1, b.g0b, b.g0a) + _colifilt(y2, b.g1b, b.g1a)
        if z.shape[-2] != h:
            z = z[..., 1:-1, :]
        if z.shape[-1] != w:
            z = z[..., 1:-1]
    if z.shape[-2:] != (h, w):
        raise ValueError(f"low-pass shape {z.shape[-2:]} inconsistent with plane {dec.shape}")
    lh, hl, hh = _split(dec.highs[0])
    y1 = _cols(_colfilter, z, b.g0o) + _cols(_colfilter, lh, b.g1o)
    y2 = _cols(_colfilter, hl, b.g0o) + _cols(_colfilter, hh, b.g1o)
    return _colfilter(y1, b.g0o) + _colfilter(y2, b.g1o)


def subband(dec: Decomposition, level: int, d: int) -> np.ndarray:
    """View of directional sub-band ``d`` (1..6) at ``level`` (1..levels)."""
    if not 1 <= level <= dec.levels:
        raise IndexError(f"level {level} out of range 1..{dec.levels}")
    if not 1 <= d <= 6:
        raise IndexError(f"direction {d} out of range 1..6")
    return dec.highs[level - 1][..., d - 1]


def pad_to_even(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape[-2:]
    pad = [(0, 0)] * (plane.ndim - 2) + [(0, h % 2), (0, w % 2)]
    return np.pad(plane, pad, mode="symmetric")


def band_energy(dec: Decomposition, level: int, d: int) -> float:
    return float(np.sum(np.abs(subband(dec, level, d)) ** 2))


def shift_energy_ratio(plane: np.ndarray, level: int, d: int, shift: int, margin: int = 2) -> float:
    """Relative change of a sub-band's energy under a circular shift of ``shift`` pixels.

    The wrap-around seam of the shifted plane lands on the border, so the
    outer ``margin`` coefficients on every side are left out of both energies.
    """
    if shift == 0:
        return 0.0
    crop = (slice(margin, -margin or None),) * 2

    def energy(p):
        return float(np.sum(np.abs(subband(forward(p, levels=2), level, d)[crop]) ** 2))

    ref = energy(plane)
    moved = energy(np.roll(plane, shift, axis=(-2, -1)))
    return abs(moved - ref) / ref if ref > 0 else 0.0


def dump_magnitudes(dec: Decomposition, path) -> None:
    """Write a debug mosaic of sub-band magnitudes (one row per level) as PNG."""
    from PIL import Image

    rows = []
    for band in dec.highs:
        mag = np.abs(band)
        rows.append(np.concatenate([m / (m.max() or 1.0) for m in np.moveaxis(mag, -1, 0)], axis=1))
    width = max(r.shape[1] for r in rows)
    rows = [np.pad(r, ((0, 0), (0, width - r.shape[1]))) for r in rows]
    Image.fromarray(np.round(np.concatenate(rows, axis=0) * 255).astype(np.uint8)).save(path)
