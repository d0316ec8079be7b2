"""Training-style loss terms evaluated as plain metrics, plus bit error rate.

No gradients anywhere: these score a finished embed/distort/decode run.
Decoder outputs are raw correlations, so they are squashed to [0, 1] with a
logistic before being compared with {0, 1} message bits.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

# logistic slope on raw correlation scores; clean detector scores sit
# around +/-6 or beyond at the default strength, giving > 0.99 confidence
SOFT_SLOPE = 1.0


def _bits(x, name="message") -> np.ndarray:
    a = np.asarray(x)
    if a.ndim != 1:
        raise ValueError(f"{name} must be 1-D")
    if not np.isin(a, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0/1")
    return a.astype(np.int64)


def ber(w_rec, w_o) -> float:
    """Fraction of differing bits."""
    a, b = _bits(w_rec, "recovered message"), _bits(w_o, "reference message")
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("empty message")
    return float(np.sum(np.abs(a - b)) / a.size)


def to_unit(scores, slope: float = SOFT_SLOPE) -> np.ndarray:
    """Map raw correlation scores to bit probabilities in [0, 1]."""
    s = np.asarray(scores, dtype=float)
    return 0.5 * (1.0 + np.tanh(0.5 * slope * s))   # logistic, overflow-safe


def to_signed(scores, slope: float = SOFT_SLOPE) -> np.ndarray:
    """Like :func:`to_unit` but centred: 0 means a coin flip, +/-1 full confidence."""
    return np.tanh(0.5 * slope * np.asarray(scores, dtype=float))


def _mse(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def embedding_loss(u, u_embedded) -> float:
    """MSE over coefficient entries, real and imaginary parts counted separately."""
    u, v = np.asarray(u), np.asarray(u_embedded)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {v.shape}")
    d = v - u
    return float((np.sum(np.real(d) ** 2) + np.sum(np.imag(d) ** 2)) / (2 * d.size))


def tracing_loss(w_o, w_t_unit) -> float:
    """MSE between target bits and soft outputs (clamped to [0, 1])."""
    return _mse(_bits(w_o), np.clip(np.asarray(w_t_unit, dtype=float), 0.0, 1.0))


def detection_losses(w_o, w_d_common_unit, w_d_malicious_signed) -> tuple[float, float]:
    """(match loss on benign copies, distance-from-chance loss on malicious copies).

    The second term takes centred scores in [-1, 1]; all-zero means the
    detector is guessing, which is the goal for manipulated images.
    """
    l1 = _mse(_bits(w_o), np.clip(np.asarray(w_d_common_unit, dtype=float), 0.0, 1.0))
    mal = np.clip(np.asarray(w_d_malicious_signed, dtype=float), -1.0, 1.0)
    l2 = _mse(np.zeros_like(mal), mal)
    return l1, l2


@dataclass(frozen=True)
class LossWeights:
    gnn: float = 0.01
    en: float = 1.0
    tr: float = 10.0
    de1: float = 10.0
    de2: float = 10.0

    def __post_init__(self):
        if min(self.gnn, self.en, self.tr, self.de1, self.de2) < 0:
            raise ValueError("loss weights must be non-negative")


@dataclass(frozen=True)
class LossReport:
    l_gnn: float
    l_en: float
    l_tr: float
    l_de1: float
    l_de2: float
    l_total: float

    def as_dict(self) -> dict:
        return asdict(self)


def total_loss(l_gnn, l_en, l_tr, l_de1, l_de2, weights: LossWeights = LossWeights()) -> float:
    w = weights
    return w.gnn * l_gnn + w.en * l_en + w.tr * l_tr + w.de1 * l_de1 + w.de2 * l_de2


def loss_report(l_gnn, l_en, l_tr, l_de1, l_de2, weights: LossWeights = LossWeights()) -> LossReport:
    parts = [float(v) for v in (l_gnn, l_en, l_tr, l_de1, l_de2)]
    if min(parts) < 0:
        raise ValueError("loss components must be non-negative")
    return LossReport(*parts, total_loss(*parts, weights))
