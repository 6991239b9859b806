"""Scalar nonlinearities: evaluation, derivative, antiderivative, asymptotics.

A :class:`Nonlinearity` bundles g, its symbolic derivative, and the
antiderivative G anchored at G(0) = 0.  G comes from a registered closed
form when available, otherwise from composite quadrature accumulated
through geometrically spaced checkpoints (0, +-1, +-2, +-4, ...), so that
repeated evaluations at large |s| cost amortized O(1) extra work.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .quadrature import interval_grid


class AntiderivativeError(Exception):
    """Quadrature for G failed to converge; carries the achieved tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class LimitEstimate:
    value: float
    exists: bool


@dataclass(frozen=True)
class AsymptoticReport:
    """Tail behavior of g and of G(s)/s on both rays.

    A limit "exists" when the total variation of its samples over the last
    sampled decade stays below the tolerance; otherwise the residual
    oscillation half-range is reported.
    """

    g_plus: LimitEstimate
    g_minus: LimitEstimate
    G_plus_slope: LimitEstimate
    G_minus_slope: LimitEstimate
    oscillation_amplitude: float


@dataclass(frozen=True)
class BoundCertificate:
    """Sampled sup|g| with an optional user-declared analytic bound."""

    sampled_sup: float
    declared: float | None

    @property
    def value(self) -> float:
        return self.declared if self.declared is not None else self.sampled_sup


class Nonlinearity:
    """Evaluatable g with symbolic g' and antiderivative accessor."""

    def __init__(self, g: ex.Expr, antiderivative: ex.Expr | None = None,
                 declared_bound: float | None = None, name: str = "custom"):
        self.name = name
        self.g_expr = g
        self.g_prime_expr = ex.differentiate(g)
        self.G_expr = antiderivative
        self.declared_bound = declared_bound
        self._g = ex.compile_fn(g)
        self._g_prime = ex.compile_fn(self.g_prime_expr)
        self._G = ex.compile_fn(antiderivative) if antiderivative is not None else None
        self._checkpoints = {0.0: 0.0}
        self._lock = threading.Lock()

    @classmethod
    def from_text(cls, text: str, antiderivative_text: str | None = None,
                  declared_bound: float | None = None,
                  name: str = "custom") -> "Nonlinearity":
        g = ex.parse(text)
        G = ex.parse(antiderivative_text) if antiderivative_text else None
        return cls(g, antiderivative=G, declared_bound=declared_bound, name=name)

    def g(self, s):
        return self._g(s)

    def g_prime(self, s):
        return self._g_prime(s)

    # --- antiderivative -------------------------------------------------

    def G(self, s):
        """G(s) = integral of g from 0 to s, vectorized."""
        if self._G is not None:
            return self._G(s)
        if np.isscalar(s):
            return self._numeric_G(float(s))
        arr = np.asarray(s, dtype=float)
        flat = arr.ravel()
        values = {0.0: 0.0}
        ordered = np.unique(flat)
        for ray in (ordered[ordered > 0.0], ordered[ordered < 0.0][::-1]):
            prev, total = 0.0, 0.0
            for v in ray:
                total += self._segment(prev, v)
                prev = v
                values[v] = total
        out = np.array([values[v] for v in flat])
        return out.reshape(arr.shape)

    def _segment(self, a: float, b: float) -> float:
        """Composite Gauss-Legendre integral of g over [a, b] with a
        doubling convergence check."""
        if a == b:
            return 0.0
        length = abs(b - a)
        # resolve a couple of points per unit so oscillatory tails converge
        cells = max(8, int(math.ceil(length)))
        previous = None
        for _ in range(6):
            x, w = interval_grid(a, b, cells, 10)
            value = float(np.dot(w, self._g(x)))
            if previous is not None:
                err = abs(value - previous)
                if err <= 1e-11 * (1.0 + abs(value)):
                    return value
            previous = value
            cells *= 2
        raise AntiderivativeError(
            f"antiderivative quadrature on [{a}, {b}] did not converge; "
            f"achieved {abs(value - previous):.3e}",
            achieved=abs(value - previous))

    def _numeric_G(self, s: float) -> float:
        if s == 0.0:
            return 0.0
        sign = 1.0 if s > 0 else -1.0
        mag = abs(s)
        # last checkpoint magnitude not exceeding |s|, on the same ray
        level = 0.0 if mag < 1.0 else 2.0 ** math.floor(math.log2(mag))
        anchor = sign * level
        with self._lock:
            have = anchor in self._checkpoints
        if not have:
            self._fill_checkpoints(sign, level)
        with self._lock:
            base = self._checkpoints[anchor]
        return base + self._segment(anchor, s)

    def _fill_checkpoints(self, sign: float, level: float):
        prev = 0.0
        acc = 0.0
        mag = 1.0
        while mag <= level:
            point = sign * mag
            with self._lock:
                known = self._checkpoints.get(point)
            if known is not None:
                acc = known
            else:
                acc = acc + self._segment(prev, point)
                with self._lock:
                    self._checkpoints[point] = acc
            prev = point
            mag *= 2.0

    # --- asymptotics ----------------------------------------------------

    def asymptotics(self, s_max: float = 1e6,
                    tolerance: float = 1e-2) -> AsymptoticReport:
        """Estimate g(+-inf) and the ray slopes of G over geometric grids."""
        if s_max < 1e4:
            raise ValueError("s_max must be at least 1e4")
        g_plus, osc_p = self._tail_limit(self.g, s_max, tolerance,
                                         negative=False, per_decade=64)
        g_minus, osc_m = self._tail_limit(self.g, s_max, tolerance,
                                          negative=True, per_decade=64)
        slope = lambda s: self.G(s) / s
        G_plus, _ = self._tail_limit(slope, s_max, tolerance,
                                     negative=False, per_decade=16)
        G_minus, _ = self._tail_limit(slope, s_max, tolerance,
                                      negative=True, per_decade=16)
        return AsymptoticReport(g_plus=g_plus, g_minus=g_minus,
                                G_plus_slope=G_plus, G_minus_slope=G_minus,
                                oscillation_amplitude=max(osc_p, osc_m))

    @staticmethod
    def _tail_limit(fn, s_max: float, tolerance: float,
                    negative: bool, per_decade: int):
        decades = math.log10(s_max)
        count = max(2, int(round(decades * per_decade)))
        grid = np.logspace(0.0, decades, count)
        if negative:
            grid = -grid
        values = np.asarray(fn(grid), dtype=float)
        tail = values[np.abs(grid) >= s_max / 10.0]
        variation = float(np.sum(np.abs(np.diff(tail))))
        amplitude = float((tail.max() - tail.min()) / 2.0)
        exists = variation <= tolerance
        return LimitEstimate(float(tail.mean()), exists), amplitude

    # --- boundedness ----------------------------------------------------

    def bound(self, s_max: float = 1e7, samples: int = 4096,
              refine: int = 50) -> BoundCertificate:
        """Certificate for sup|g| by sampling plus local refinement.

        Samples |g| on symmetric geometric grids, then sharpens the top
        candidates by golden-section search between their grid neighbors.
        """
        pos = np.logspace(-8, math.log10(s_max), samples)
        grid = np.concatenate([-pos[::-1], [0.0], pos])
        values = np.abs(self._g(grid))
        best = float(values.max())
        top = np.argsort(values)[-refine:]
        for idx in top:
            lo = grid[max(idx - 1, 0)]
            hi = grid[min(idx + 1, grid.size - 1)]
            best = max(best, _golden_max(lambda s: abs(self._g(s)), lo, hi))
        return BoundCertificate(sampled_sup=best, declared=self.declared_bound)


def _golden_max(fn, lo: float, hi: float, iters: int = 80) -> float:
    ratio = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - ratio * (b - a)
    d = a + ratio * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - ratio * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + ratio * (b - a)
            fd = fn(d)
    return max(fc, fd)


BUILTIN_NAMES = ("arctan", "arctan_cos", "vanishing_log",
                 "vanishing_log_negated", "cauchy_cos", "paper_example")

_PARAMETRIC = {"arctan_cos", "cauchy_cos", "paper_example"}


def builtin(name: str, c: float | None = None) -> Nonlinearity:
    """Construct one of the built-in nonlinearities (closed-form G registered)."""
    if name not in BUILTIN_NAMES:
        raise ValueError(f"unknown builtin {name!r}; choose from {BUILTIN_NAMES}")
    if name in _PARAMETRIC:
        if c is None:
            raise ValueError(f"builtin {name!r} needs its parameter c")
        c = float(c)
    label = name if c is None else f"{name}({c:g})"
    cs = None if c is None else repr(c)
    if name == "arctan":
        return Nonlinearity.from_text(
            "atan(s)",
            "s*atan(s) - ln(1+s^2)/2",
            declared_bound=math.pi / 2, name=label)
    if name == "arctan_cos":
        return Nonlinearity.from_text(
            f"atan(s) + {cs}*cos(s)",
            f"s*atan(s) - ln(1+s^2)/2 + {cs}*sin(s)",
            declared_bound=math.pi / 2 + abs(c), name=label)
    if name == "vanishing_log":
        return Nonlinearity.from_text(
            "sgn(s)/((e+abs(s))*ln(e+abs(s)))",
            "ln(ln(e+abs(s)))",
            declared_bound=1.0 / math.e, name=label)
    if name == "vanishing_log_negated":
        return Nonlinearity.from_text(
            "-sgn(s)/((e+abs(s))*ln(e+abs(s)))",
            "-ln(ln(e+abs(s)))",
            declared_bound=1.0 / math.e, name=label)
    if name == "cauchy_cos":
        return Nonlinearity.from_text(
            f"s/(1+s^2) + {cs}*cos(s)",
            f"ln(1+s^2)/2 + {cs}*sin(s)",
            declared_bound=0.5 + abs(c), name=label)
    # paper_example: a vanishing, sign-free term plus a bounded oscillation
    return Nonlinearity.from_text(
        f"s/((e+s^2)*ln(sqrt(e+s^2))) + {cs}*cos(s)",
        f"ln(ln(e+s^2)) + {cs}*sin(s)",
        name=label)
