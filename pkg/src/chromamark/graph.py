"""Structural consistency score from a fixed-weight graph convolution.

The luma plane is area-averaged onto a small grid whose cells are graph
nodes joined to their 4 neighbours.  Two propagation layers with the
self-looped, symmetrically normalised adjacency, each followed by a seeded
random linear map and ``tanh``, give per-node features; their mean is the
image descriptor.  Consistency is the squared distance between descriptors.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import check_image, luma

DEFAULT_GRID = (64, 64)
FEATURES = 16
LAYERS = 2


@dataclass(frozen=True)
class PixelGraph:
    values: np.ndarray      # (gh, gw) node values in [0, 1]

    @property
    def grid(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def n_nodes(self) -> int:
        return self.values.size

    def degrees(self) -> np.ndarray:
        """4-neighbourhood degree of every node (no self loop)."""
        return grid_degrees(*self.grid)


@dataclass(frozen=True)
class GraphFeatures:
    nodes: np.ndarray       # (gh, gw, F)
    pooled: np.ndarray      # (F,)


def grid_degrees(gh: int, gw: int) -> np.ndarray:
    deg = np.full((gh, gw), 4, dtype=int)
    deg[0, :] -= 1
    deg[-1, :] -= 1
    deg[:, 0] -= 1
    deg[:, -1] -= 1
    return deg


def _area_weights(n_in: int, n_out: int) -> np.ndarray:
    # row i holds the fraction of each input sample covered by output cell i
    edges = np.arange(n_out + 1) * (n_in / n_out)
    lo, hi = edges[:-1, None], edges[1:, None]
    j = np.arange(n_in)[None, :]
    overlap = np.clip(np.minimum(hi, j + 1) - np.maximum(lo, j), 0, None)
    return overlap / overlap.sum(axis=1, keepdims=True)


def build_graph(img: np.ndarray, grid=DEFAULT_GRID) -> PixelGraph:
    img = check_image(img)
    gh, gw = grid
    h, w = img.shape[:2]
    if gh < 1 or gw < 1:
        raise ValueError("grid must be positive")
    if gh > h or gw > w:
        raise ValueError(f"grid {gh}x{gw} larger than image {h}x{w}")
    y = luma(img) / 255.0
    if (gh, gw) != (h, w):
        y = _area_weights(h, gh) @ y @ _area_weights(w, gw).T
    return PixelGraph(y)


def propagate(x: np.ndarray) -> np.ndarray:
    """One step of D^-1/2 (A + I) D^-1/2 on a grid signal ``(gh, gw, ...)``."""
    gh, gw = x.shape[:2]
    d = (grid_degrees(gh, gw) + 1.0) ** -0.5
    d = d.reshape((gh, gw) + (1,) * (x.ndim - 2))
    z = x * d
    acc = z.copy()
    acc[1:] += z[:-1]
    acc[:-1] += z[1:]
    acc[:, 1:] += z[:, :-1]
    acc[:, :-1] += z[:, 1:]
    return acc * d


def normalized_adjacency(gh: int, gw: int) -> np.ndarray:
    """Dense Â for small grids (tests and inspection)."""
    n = gh * gw
    eye = np.eye(n).reshape(n, gh, gw).transpose(1, 2, 0)
    return propagate(eye).reshape(n, n)


def gcn_weights(seed: int = 0, features: int = FEATURES) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    dims = [1] + [features] * LAYERS
    return [rng.normal(0.0, 1.0, size=(a, b)) / np.sqrt(a) for a, b in zip(dims[:-1], dims[1:])]


def gcn_features(g: PixelGraph, seed: int = 0, weights=None) -> GraphFeatures:
    ws = gcn_weights(seed) if weights is None else weights
    h = g.values[..., None]
    for w in ws:
        h = np.tanh(propagate(h) @ w)
    return GraphFeatures(h, h.mean(axis=(0, 1)))


def consistency(i_o: np.ndarray, i_w: np.ndarray, seed: int = 0, grid=DEFAULT_GRID) -> float:
    """Squared L2 distance between pooled graph features of two images."""
    if check_image(i_o).shape != check_image(i_w).shape:
        raise ValueError(f"image shapes differ: {i_o.shape} vs {i_w.shape}")
    ws = gcn_weights(seed)
    f_o = gcn_features(build_graph(i_o, grid), weights=ws).pooled
    f_w = gcn_features(build_graph(i_w, grid), weights=ws).pooled
    return float(np.sum((f_o - f_w) ** 2))
