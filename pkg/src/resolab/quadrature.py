"""Gauss-Legendre quadrature on intervals and tensor-product rectangles.

This is the single integration backend of the package.  Rules are
computed by Newton iteration on the Legendre polynomials and cached;
composite integration uses a fixed cell-major summation order so that
identical inputs give bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_ORDER = 256


class QuadratureError(Exception):
    """Raised for invalid rules or non-finite integrand samples."""


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes and weights on the reference interval [-1, 1]."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)


@dataclass(frozen=True)
class QuadratureSettings:
    """Composite-rule configuration shared by all domain integrals.

    ``cells_per_axis=None`` lets the caller derive the default (four cells
    per basis mode) from the problem size.
    """

    order: int = 10
    cells_per_axis: int | None = None
    compensated: bool = False

    def resolve_cells(self, n_modes: int) -> int:
        if self.cells_per_axis is not None:
            return self.cells_per_axis
        return max(8, 4 * n_modes)


@lru_cache(maxsize=None)
def rule(n: int) -> QuadratureRule:
    """Return the n-point Gauss-Legendre rule on [-1, 1].

    Nodes are roots of the degree-n Legendre polynomial, found by Newton
    iteration from the Chebyshev-like initial guess; weights follow from
    the derivative values.  Node accuracy is at machine-epsilon level.
    """
    if not 1 <= n <= MAX_ORDER:
        raise QuadratureError(f"quadrature order must be in [1, {MAX_ORDER}], got {n}")
    if n == 1:
        return QuadratureRule(np.array([0.0]), np.array([2.0]), 1)

    i = np.arange(1, n + 1)
    x = np.cos(math.pi * (i - 0.25) / (n + 0.5))
    for _ in range(100):
        p_prev = np.ones_like(x)
        p = x.copy()
        for j in range(2, n + 1):
            p_prev, p = p, ((2 * j - 1) * x * p - (j - 1) * p_prev) / j
        dp = n * (x * p - p_prev) / (x * x - 1.0)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    # one clean-up pass for the weights at the converged nodes
    p_prev = np.ones_like(x)
    p = x.copy()
    for j in range(2, n + 1):
        p_prev, p = p, ((2 * j - 1) * x * p - (j - 1) * p_prev) / j
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order_idx = np.argsort(x)
    return QuadratureRule(x[order_idx], w[order_idx], n)


def interval_grid(a: float, b: float, cells: int, order: int):
    """Mapped nodes/weights of the composite rule on [a, b], cell-major."""
    if cells < 1:
        raise QuadratureError(f"need at least one cell, got {cells}")
    r = rule(order)
    edges = np.linspace(a, b, cells + 1)
    h = (b - a) / cells
    # cell-major layout: all nodes of cell 0, then cell 1, ...
    x = (edges[:-1, None] + (r.nodes[None, :] + 1.0) * (h / 2.0)).ravel()
    w = np.broadcast_to(r.weights * (h / 2.0), (cells, order)).ravel()
    return x, w


def _checked(values: np.ndarray, points) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        bad = int(np.argmax(~np.isfinite(values.ravel())))
        where = points[bad] if points is not None else bad
        raise QuadratureError(f"non-finite integrand sample at node {where!r}")
    return values


def _reduce(terms: np.ndarray, compensated: bool) -> float:
    if compensated:
        return math.fsum(terms.tolist())
    return float(np.add.reduce(terms))


def integrate_interval(fn, a: float, b: float, cells: int, order: int,
                       compensated: bool = False) -> float:
    """Integrate ``fn`` over [a, b] with the composite Gauss-Legendre rule."""
    x, w = interval_grid(a, b, cells, order)
    values = _checked(fn(x), x)
    return _reduce(w * values, compensated)


def rectangle_grid(lx: float, ly: float, cells: int, order: int):
    """Tensor-product nodes/weights on [0, lx] x [0, ly], x-major flattening."""
    x, wx = interval_grid(0.0, lx, cells, order)
    y, wy = interval_grid(0.0, ly, cells, order)
    xx = np.repeat(x, y.size)
    yy = np.tile(y, x.size)
    ww = np.repeat(wx, wy.size) * np.tile(wy, wx.size)
    return xx, yy, ww


def integrate_rectangle(fn, lx: float, ly: float, cells: int, order: int,
                        compensated: bool = False) -> float:
    """Integrate ``fn(x, y)`` over the rectangle [0, lx] x [0, ly]."""
    xx, yy, ww = rectangle_grid(lx, ly, cells, order)
    values = _checked(fn(xx, yy), list(zip(xx, yy)))
    return _reduce(ww * values, compensated)
