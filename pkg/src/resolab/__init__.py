"""Numerical laboratory for semilinear elliptic problems at resonance.

Checks Landesman-Lazer-type solvability conditions for a bounded
nonlinearity and computes weak solutions by critical-point search on a
spectral Galerkin truncation of the energy functional.
"""

__version__ = "0.1.0"

from .basis import (Domain, EigenBasis, EigenPair, GapConstants,
                    SpectralDecomposition, decompose, eigen_interval,
                    eigen_rectangle, eigenpairs, gap_constants, project,
                    split_rhs)
from .conditions import (ConditionReport, ConditionSettings, classify_sc,
                         direction_samples, evaluate_all, ll_margin,
                         ll_sc_bridge, pll_margin)
from .estimator import ConditionChecker, ResonantSolver
from .expr import ParseError, differentiate, parse, to_text
from .nonlinearity import (AsymptoticReport, BoundCertificate, Nonlinearity,
                           builtin)
from .quadrature import (QuadratureError, QuadratureRule, QuadratureSettings,
                         integrate_interval, integrate_rectangle, rule)
from .solver import (EnergySplit, GalerkinProblem, SolveResult, energy_split,
                     multi_start_solve, newton_solve, saddle_search,
                     verify_weak_residual)

__all__ = [
    "Domain", "EigenBasis", "EigenPair", "GapConstants",
    "SpectralDecomposition", "decompose", "eigen_interval", "eigen_rectangle",
    "eigenpairs", "gap_constants", "project", "split_rhs",
    "ConditionReport", "ConditionSettings", "classify_sc", "direction_samples",
    "evaluate_all", "ll_margin", "ll_sc_bridge", "pll_margin",
    "ConditionChecker", "ResonantSolver",
    "ParseError", "differentiate", "parse", "to_text",
    "AsymptoticReport", "BoundCertificate", "Nonlinearity", "builtin",
    "QuadratureError", "QuadratureRule", "QuadratureSettings",
    "integrate_interval", "integrate_rectangle", "rule",
    "EnergySplit", "GalerkinProblem", "SolveResult", "energy_split",
    "multi_start_solve", "newton_solve", "saddle_search",
    "verify_weak_residual",
]
