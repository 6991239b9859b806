"""Solvability condition checks for the resonant problem.

Three families are evaluated for a concrete (g, f, resonant rank):

* the classical two-sided inequality on the limits g(+-inf),
* its potential variant using the ray slopes of the antiderivative,
* the divergence condition on J(t) = int G(t phi0) - t int f_bar phi0
  along ray sequences t -> infinity.

The divergence condition quantifies over all sequences aligning with a
resonant direction; only ray sequences are tested here, so positive
verdicts are labelled "ray-certified".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .basis import EigenBasis, SpectralDecomposition, project
from .nonlinearity import AsymptoticReport, Nonlinearity
from .quadrature import QuadratureSettings

HOLDS = "holds"
FAILS = "fails"
INAPPLICABLE = "inapplicable"
INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class ConditionSettings:
    t_min: float = 1.0
    t_max: float = 1e8
    t_points: int = 32
    direction_count: int = 64
    divergence_factor: float = 10.0
    quadrature_tolerance: float = 1e-9
    # margins below this are treated as zero: tail-limit estimates carry
    # sampling error (slopes of slowly vanishing G decay only like log s / s),
    # and the two-sided conditions are strict inequalities
    margin_tolerance: float = 1e-4


@dataclass
class ConditionReport:
    condition: str          # LL+ | LL- | PLL+ | PLL- | SC+ | SC-
    verdict: str            # holds | fails | inapplicable | indeterminate
    margins: list[float] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    ray_certified: bool = False

    def to_dict(self) -> dict:
        return {"condition": self.condition, "verdict": self.verdict,
                "margins": self.margins, "notes": self.notes,
                "ray_certified": self.ray_certified}


def direction_samples(decomposition: SpectralDecomposition,
                      count: int = 64) -> np.ndarray:
    """Unit-norm coefficient samples on the resonant eigenspace.

    For a simple eigenvalue these are exactly the two signed directions.
    For multiplicity >= 2 a deterministic low-discrepancy sphere sample is
    used (Halton points through the Gaussian map), antipodes included.
    """
    m = decomposition.m
    if m == 1:
        return np.array([[1.0], [-1.0]])
    if count < 2:
        raise ValueError("need at least 2 directions")
    half = max(count // 2, 1)
    engine = qmc.Halton(d=m, scramble=False)
    engine.fast_forward(1)  # skip the degenerate first point
    raw = engine.random(half)
    gauss = _norm_ppf(raw)
    norms = np.linalg.norm(gauss, axis=1, keepdims=True)
    pts = gauss / np.where(norms == 0.0, 1.0, norms)
    return np.vstack([pts, -pts])


def _norm_ppf(u: np.ndarray) -> np.ndarray:
    from scipy.special import ndtri
    return ndtri(np.clip(u, 1e-12, 1.0 - 1e-12))


class ConditionEvaluator:
    """Shared geometry for margin and ray-profile computations."""

    def __init__(self, basis: EigenBasis, decomposition: SpectralDecomposition,
                 quadrature: QuadratureSettings = QuadratureSettings(),
                 settings: ConditionSettings = ConditionSettings()):
        self.basis = basis
        self.dec = decomposition
        self.settings = settings
        self.points, self.weights = basis.quadrature_grid(quadrature)
        self.phi = basis.matrix(*self.points)
        bar = [i - 1 for i in decomposition.bar_indices]
        self.bar_matrix = self.phi[bar, :]

    def bar_field(self, bar_coeffs: np.ndarray) -> np.ndarray:
        """Point values of a resonant-space element on the quadrature grid."""
        return np.asarray(bar_coeffs, dtype=float) @ self.bar_matrix

    def f_bar_field(self, f: np.ndarray) -> np.ndarray:
        f_bar = project(f, self.dec, "bar")
        return f_bar @ self.phi

    def signed_margin(self, g_plus: float, g_minus: float, f: np.ndarray,
                      direction: np.ndarray) -> float:
        """int (g(+inf) - f_bar) phi0+ - int (g(-inf) - f_bar) phi0-."""
        phi0 = self.bar_field(direction)
        fb = self.f_bar_field(f)
        plus = np.maximum(phi0, 0.0)
        minus = np.maximum(-phi0, 0.0)
        return float(np.dot(self.weights, (g_plus - fb) * plus)
                     - np.dot(self.weights, (g_minus - fb) * minus))

    def t_grid(self) -> np.ndarray:
        s = self.settings
        return np.logspace(math.log10(s.t_min), math.log10(s.t_max), s.t_points)

    def ray_profile(self, nonlinearity: Nonlinearity, f: np.ndarray,
                    direction: np.ndarray,
                    t_grid: np.ndarray | None = None) -> np.ndarray:
        """J(t) = int G(t phi0) - t int f_bar phi0 over the ray grid."""
        if t_grid is None:
            t_grid = self.t_grid()
        phi0 = self.bar_field(direction)
        fb = self.f_bar_field(f)
        linear = float(np.dot(self.weights, fb * phi0))
        values = np.empty(t_grid.size)
        for j, t in enumerate(t_grid):
            values[j] = float(np.dot(self.weights, nonlinearity.G(t * phi0)))
            values[j] -= t * linear
        return values


def ll_margin(evaluator: ConditionEvaluator, limits: AsymptoticReport,
              f: np.ndarray, direction: np.ndarray) -> float:
    if not (limits.g_plus.exists and limits.g_minus.exists):
        raise ValueError("limits of g do not exist; condition inapplicable")
    return evaluator.signed_margin(limits.g_plus.value, limits.g_minus.value,
                                   f, direction)


def pll_margin(evaluator: ConditionEvaluator, limits: AsymptoticReport,
               f: np.ndarray, direction: np.ndarray) -> float:
    if not (limits.G_plus_slope.exists and limits.G_minus_slope.exists):
        raise ValueError("ray slopes of G do not exist; condition inapplicable")
    return evaluator.signed_margin(limits.G_plus_slope.value,
                                   limits.G_minus_slope.value, f, direction)


def ll_sc_bridge(evaluator: ConditionEvaluator, limits: AsymptoticReport,
                 f: np.ndarray, direction: np.ndarray) -> float:
    """Predicted ray limit of J(t)/t, which equals the signed margin.

    The proof's displayed limit carries "+ f_bar" inside both integrals;
    consistency with the two-sided condition requires "- f_bar", which is
    what this function (and the margin it reuses) computes.
    """
    return ll_margin(evaluator, limits, f, direction)


def _two_sided_report(tag: str, margins: list[float],
                      tolerance: float) -> ConditionReport:
    low = min(margins)
    verdict = HOLDS if low > tolerance else FAILS
    notes = [] if verdict == HOLDS else \
        [f"minimum margin {low:.6g} is not strictly positive"]
    return ConditionReport(tag, verdict, margins=margins, notes=notes)


def check_ll(evaluator: ConditionEvaluator, limits: AsymptoticReport,
             f: np.ndarray, directions: np.ndarray,
             margin_tolerance: float = 1e-4) -> dict[str, ConditionReport]:
    """Reports for both signs of the limit-based condition.

    The "+" condition holds when the signed margin is strictly positive on
    every sampled direction (antipodes realize the symmetric inequality);
    the "-" condition when it is strictly negative everywhere.
    """
    exists = limits.g_plus.exists and limits.g_minus.exists
    if not exists:
        note = "g(+-inf) does not exist"
        return {"LL+": ConditionReport("LL+", INAPPLICABLE, notes=[note]),
                "LL-": ConditionReport("LL-", INAPPLICABLE, notes=[note])}
    margins = [ll_margin(evaluator, limits, f, d) for d in directions]
    return {"LL+": _two_sided_report("LL+", margins, margin_tolerance),
            "LL-": _two_sided_report("LL-", [-v for v in margins],
                                     margin_tolerance)}


def check_pll(evaluator: ConditionEvaluator, limits: AsymptoticReport,
              f: np.ndarray, directions: np.ndarray,
              margin_tolerance: float = 1e-4) -> dict[str, ConditionReport]:
    exists = limits.G_plus_slope.exists and limits.G_minus_slope.exists
    if not exists:
        note = "ray slopes of G do not exist"
        return {"PLL+": ConditionReport("PLL+", INAPPLICABLE, notes=[note]),
                "PLL-": ConditionReport("PLL-", INAPPLICABLE, notes=[note])}
    margins = [pll_margin(evaluator, limits, f, d) for d in directions]
    return {"PLL+": _two_sided_report("PLL+", margins, margin_tolerance),
            "PLL-": _two_sided_report("PLL-", [-v for v in margins],
                                      margin_tolerance)}


def _direction_trend(profile: np.ndarray, t_grid: np.ndarray,
                     settings: ConditionSettings) -> int:
    """+1 / -1 when the profile diverges up / down along the ray, else 0.

    Requires monotonicity over the last three sampled decades, growth
    across the final decade above the divergence threshold, and an
    agreeing affine-fit slope against log t.
    """
    threshold = settings.divergence_factor * settings.quadrature_tolerance
    logt = np.log(t_grid)
    last3 = logt >= logt[-1] - 3.0 * math.log(10.0) - 1e-12
    last1 = logt >= logt[-1] - math.log(10.0) - 1e-12
    window = profile[last3]
    growth = profile[-1] - profile[last1][0]
    slope = np.polyfit(logt[last3], window, 1)[0]
    diffs = np.diff(window)
    wiggle = 1e-12 * max(1.0, float(np.max(np.abs(window))))
    if np.all(diffs >= -wiggle) and growth >= threshold and slope > 0.0:
        return +1
    if np.all(diffs <= wiggle) and growth <= -threshold and slope < 0.0:
        return -1
    return 0


def classify_sc(profiles: list[np.ndarray], t_grid: np.ndarray,
                settings: ConditionSettings = ConditionSettings()
                ) -> dict[str, ConditionReport]:
    """Aggregate per-direction ray trends into verdicts for both signs."""
    trends = [_direction_trend(p, t_grid, settings) for p in profiles]
    growths = [float(p[-1] - p[0]) for p in profiles]
    reports = {}
    for tag, sign in (("SC+", +1), ("SC-", -1)):
        if all(t == sign for t in trends):
            reports[tag] = ConditionReport(
                tag, HOLDS, margins=growths, ray_certified=True,
                notes=["ray-certified: every sampled direction diverges"])
        elif trends and all(t == -sign for t in trends):
            reports[tag] = ConditionReport(
                tag, FAILS, margins=growths,
                notes=["every sampled ray diverges the opposite way"])
        else:
            reports[tag] = ConditionReport(
                tag, INDETERMINATE, margins=growths,
                notes=["sampled ray directions disagree or trends are flat"])
    return reports


def evaluate_all(basis: EigenBasis, decomposition: SpectralDecomposition,
                 nonlinearity: Nonlinearity, f: np.ndarray,
                 quadrature: QuadratureSettings = QuadratureSettings(),
                 settings: ConditionSettings = ConditionSettings(),
                 asymptotics: AsymptoticReport | None = None):
    """Run every condition family; returns (reports dict, profiles, t_grid)."""
    evaluator = ConditionEvaluator(basis, decomposition, quadrature, settings)
    if asymptotics is None:
        asymptotics = nonlinearity.asymptotics()
    directions = direction_samples(decomposition, settings.direction_count)
    t_grid = evaluator.t_grid()
    profiles = [evaluator.ray_profile(nonlinearity, f, d, t_grid)
                for d in directions]
    reports = {}
    reports.update(check_ll(evaluator, asymptotics, f, directions,
                            settings.margin_tolerance))
    reports.update(check_pll(evaluator, asymptotics, f, directions,
                             settings.margin_tolerance))
    reports.update(classify_sc(profiles, t_grid, settings))
    return reports, profiles, t_grid, directions, asymptotics
