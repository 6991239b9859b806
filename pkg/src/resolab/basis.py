"""Closed-form Dirichlet-Laplacian eigenbases on intervals and rectangles.

Provides the truncated eigenbasis, the three-way splitting of the
coefficient space around the resonant eigenvalue (modes below / at /
above it), projections, and the sharp spectral-gap constants of the
quadratic form ``Q(u) = |grad u|_2^2 - lambda_k |u|_2^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .quadrature import QuadratureSettings, interval_grid, rectangle_grid


class DomainError(ValueError):
    pass


class DecompositionError(ValueError):
    pass


@dataclass(frozen=True)
class Domain:
    """Product domain: an interval (a, b) or a rectangle (0,Lx) x (0,Ly)."""

    kind: str  # "interval" | "rectangle"
    bounds: tuple[float, float]

    def __post_init__(self):
        if self.kind == "interval":
            a, b = self.bounds
            if not b > a:
                raise DomainError(f"interval needs b > a, got {self.bounds}")
        elif self.kind == "rectangle":
            lx, ly = self.bounds
            if not (lx > 0 and ly > 0):
                raise DomainError(f"rectangle sides must be positive, got {self.bounds}")
        else:
            raise DomainError(f"unknown domain kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return 1 if self.kind == "interval" else 2

    @property
    def measure(self) -> float:
        if self.kind == "interval":
            a, b = self.bounds
            return b - a
        lx, ly = self.bounds
        return lx * ly

    @staticmethod
    def interval(a: float, b: float) -> "Domain":
        return Domain("interval", (float(a), float(b)))

    @staticmethod
    def rectangle(lx: float, ly: float) -> "Domain":
        return Domain("rectangle", (float(lx), float(ly)))


@dataclass(frozen=True)
class EigenPair:
    """One Dirichlet eigenvalue with its L2-normalized closed-form mode."""

    index: int           # 1-based rank in the nondecreasing ordering
    eigenvalue: float
    mode: tuple[int, ...]  # one mode number per axis


def eigen_interval(domain: Domain, count: int) -> list[EigenPair]:
    """First ``count`` eigenpairs on an interval: lambda_n = (n pi / L)^2."""
    if domain.kind != "interval":
        raise DomainError("eigen_interval needs an interval domain")
    if count < 1:
        raise ValueError("count must be >= 1")
    a, b = domain.bounds
    length = b - a
    return [EigenPair(n, (n * math.pi / length) ** 2, (n,))
            for n in range(1, count + 1)]


def eigen_rectangle(domain: Domain, count: int) -> list[EigenPair]:
    """First ``count`` eigenpairs on a rectangle, ties ordered by (p, q)."""
    if domain.kind != "rectangle":
        raise DomainError("eigen_rectangle needs a rectangle domain")
    if count < 1:
        raise ValueError("count must be >= 1")
    lx, ly = domain.bounds
    cands = []
    for p in range(1, count + 1):
        for q in range(1, count + 1):
            lam = (p * math.pi / lx) ** 2 + (q * math.pi / ly) ** 2
            cands.append((lam, p, q))
    cands.sort()
    return [EigenPair(i + 1, lam, (p, q))
            for i, (lam, p, q) in enumerate(cands[:count])]


def eigenpairs(domain: Domain, count: int) -> list[EigenPair]:
    if domain.kind == "interval":
        return eigen_interval(domain, count)
    return eigen_rectangle(domain, count)


class EigenBasis:
    """Truncated eigenbasis with vectorized mode evaluation.

    ``matrix(points)`` returns the (N, n_points) array of mode values, the
    workhorse behind every quadrature of ``g(u) * phi_i`` terms.
    """

    def __init__(self, domain: Domain, count: int):
        self.domain = domain
        self.pairs = eigenpairs(domain, count)
        self.eigenvalues = np.array([p.eigenvalue for p in self.pairs])

    def __len__(self) -> int:
        return len(self.pairs)

    def matrix(self, *points) -> np.ndarray:
        if self.domain.kind == "interval":
            (x,) = points
            a, b = self.domain.bounds
            length = b - a
            n = np.array([p.mode[0] for p in self.pairs])[:, None]
            xi = np.asarray(x, dtype=float)[None, :]
            return math.sqrt(2.0 / length) * np.sin(n * math.pi * (xi - a) / length)
        x, y = points
        lx, ly = self.domain.bounds
        p = np.array([e.mode[0] for e in self.pairs])[:, None]
        q = np.array([e.mode[1] for e in self.pairs])[:, None]
        xi = np.asarray(x, dtype=float)[None, :]
        yi = np.asarray(y, dtype=float)[None, :]
        return (2.0 / math.sqrt(lx * ly)
                * np.sin(p * math.pi * xi / lx) * np.sin(q * math.pi * yi / ly))

    def evaluate(self, coeffs: np.ndarray, *points) -> np.ndarray:
        """u(x) = sum_i coeffs_i phi_i(x) at the given points."""
        return np.asarray(coeffs, dtype=float) @ self.matrix(*points)

    def quadrature_grid(self, settings: QuadratureSettings):
        """(points tuple, weights) resolving the cells default from N."""
        max_mode = max(max(p.mode) for p in self.pairs)
        cells = settings.resolve_cells(max_mode if self.domain.kind == "rectangle"
                                       else len(self.pairs))
        if self.domain.kind == "interval":
            a, b = self.domain.bounds
            x, w = interval_grid(a, b, cells, settings.order)
            return (x,), w
        lx, ly = self.domain.bounds
        xx, yy, ww = rectangle_grid(lx, ly, cells, settings.order)
        return (xx, yy), ww


@dataclass(frozen=True)
class SpectralDecomposition:
    """Partition of ranks 1..N into modes below / at / above the resonance."""

    k: int
    m: int
    hat_indices: tuple[int, ...]
    bar_indices: tuple[int, ...]
    tilde_indices: tuple[int, ...]
    tie_tolerance: float = 1e-9

    @property
    def n(self) -> int:
        return len(self.hat_indices) + len(self.bar_indices) + len(self.tilde_indices)

    def mask(self, part: str) -> np.ndarray:
        idx = {"hat": self.hat_indices, "bar": self.bar_indices,
               "tilde": self.tilde_indices}[part]
        mask = np.zeros(self.n, dtype=bool)
        mask[[i - 1 for i in idx]] = True
        return mask


def _tie_groups(eigenvalues: np.ndarray, tol: float) -> list[list[int]]:
    groups = [[1]]
    for i in range(1, len(eigenvalues)):
        prev, cur = eigenvalues[i - 1], eigenvalues[i]
        if cur - prev <= tol * max(abs(cur), 1.0):
            groups[-1].append(i + 1)
        else:
            groups.append([i + 1])
    return groups


def decompose(pairs: list[EigenPair], k: int,
              tie_tolerance: float = 1e-9) -> SpectralDecomposition:
    """Split ranks 1..N around the eigenvalue of rank ``k``.

    ``k`` must be the first rank of its eigenvalue tie-group, and the
    truncation must extend strictly beyond the group.
    """
    n = len(pairs)
    if not 1 <= k <= n:
        raise DecompositionError(f"resonant rank k={k} outside 1..{n}")
    lam = np.array([p.eigenvalue for p in pairs])
    groups = _tie_groups(lam, tie_tolerance)
    group = next(g for g in groups if k in g)
    if group[0] != k:
        raise DecompositionError(
            f"rank {k} lies inside the eigenvalue tie-group starting at rank "
            f"{group[0]}; use k={group[0]} to address this eigenvalue")
    m = len(group)
    if k + m - 1 >= n:
        raise DecompositionError(
            f"truncation N={n} too small: need N > {k + m - 1} so that modes "
            f"above the resonant group are represented")
    return SpectralDecomposition(
        k=k, m=m,
        hat_indices=tuple(range(1, k)),
        bar_indices=tuple(group),
        tilde_indices=tuple(range(k + m, n + 1)),
        tie_tolerance=tie_tolerance,
    )


def project(u: np.ndarray, decomposition: SpectralDecomposition,
            part: str) -> np.ndarray:
    """Zero all coefficients outside the requested part (hat|bar|tilde)."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != decomposition.n:
        raise ValueError(f"coefficient length {u.shape[-1]} does not match "
                         f"decomposition size {decomposition.n}")
    out = np.zeros_like(u)
    mask = decomposition.mask(part)
    out[..., mask] = u[..., mask]
    return out


def split_rhs(f: np.ndarray, decomposition: SpectralDecomposition):
    """Split f into its resonant part f_bar and the orthogonal rest."""
    f_bar = project(f, decomposition, "bar")
    return f_bar, np.asarray(f, dtype=float) - f_bar


@dataclass(frozen=True)
class GapConstants:
    """Sharp constants of the spectral-gap inequalities in the H-norm.

    ``Q(u_hat) <= -c1 |u_hat|_H^2`` and ``Q(u_tilde) >= c3 |u_tilde|_H^2``
    with equality at the ranks adjacent to the resonant group.  c1 is None
    when there are no modes below the resonance (k = 1).
    """

    c1: float | None
    c3: float


def gap_constants(pairs: list[EigenPair],
                  decomposition: SpectralDecomposition) -> GapConstants:
    lam = np.array([p.eigenvalue for p in pairs])
    k, m = decomposition.k, decomposition.m
    lam_k = lam[k - 1]
    c1 = None if k == 1 else lam_k / lam[k - 2] - 1.0
    c3 = 1.0 - lam_k / lam[k + m - 1]
    return GapConstants(c1=c1, c3=c3)


def l2_norm_sq(coeffs: np.ndarray) -> float:
    return float(np.dot(coeffs, coeffs))


def h_norm_sq(coeffs: np.ndarray, eigenvalues: np.ndarray) -> float:
    return float(np.dot(eigenvalues, np.asarray(coeffs) ** 2))


def quadratic_form(coeffs: np.ndarray, eigenvalues: np.ndarray,
                   lam_k: float) -> float:
    """Q(u) = |grad u|_2^2 - lambda_k |u|_2^2 on the coefficient space."""
    a2 = np.asarray(coeffs) ** 2
    return float(np.dot(eigenvalues - lam_k, a2))
