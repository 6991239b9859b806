"""Scikit-learn style facade over the resonance lab.

``ResonantSolver`` behaves like an estimator: construct with
hyperparameters, ``fit`` on a right-hand side, then ``predict`` samples
the computed solution at spatial points.  ``ConditionChecker`` follows
the same pattern for the solvability-condition reports.  Both inherit
``get_params``/``set_params`` from :class:`sklearn.base.BaseEstimator`,
so they compose with pipelines and parameter searches.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import expr as ex
from .basis import Domain, EigenBasis, decompose
from .conditions import HOLDS, ConditionSettings, evaluate_all
from .nonlinearity import Nonlinearity, builtin
from .quadrature import QuadratureSettings
from .solver import GalerkinProblem, multi_start_solve, verify_weak_residual


def _as_domain(domain) -> Domain:
    if isinstance(domain, Domain):
        return domain
    kind, *bounds = domain if isinstance(domain[0], str) else ("interval", *domain)
    if kind == "interval":
        return Domain.interval(*bounds)
    return Domain.rectangle(*bounds)


def _as_nonlinearity(g, c) -> Nonlinearity:
    if isinstance(g, Nonlinearity):
        return g
    try:
        return builtin(g, c)
    except ValueError:
        return Nonlinearity.from_text(g)


def check_points(X, dim: int) -> tuple:
    """Validate prediction points and split them into coordinate arrays."""
    X = np.asarray(X, dtype=float)
    if dim == 1:
        if X.ndim == 2 and X.shape[1] == 1:
            X = X[:, 0]
        if X.ndim != 1:
            raise ValueError(f"expected shape (n,) or (n, 1), got {X.shape}")
        return (X,)
    if X.ndim != 2 or X.shape[1] != 2:
        raise ValueError(f"expected shape (n, 2), got {X.shape}")
    return (X[:, 0], X[:, 1])


def _as_f(f, problem: GalerkinProblem, domain: Domain):
    if f is None:
        return np.zeros(problem.n), None
    if callable(f):
        return problem.project_field(f), f
    if isinstance(f, str):
        variables = ("x",) if domain.kind == "interval" else ("x", "y")
        fn = ex.compile_fn(ex.parse(f, variables), variables)
        return problem.project_field(fn), fn
    coeffs = np.asarray(f, dtype=float)
    if coeffs.shape != (problem.n,):
        raise ValueError(f"f needs {problem.n} coefficients, got {coeffs.shape}")
    return coeffs, None


class ResonantSolver(BaseEstimator):
    """Critical-point solver exposed through the fit/predict protocol.

    Parameters mirror the config file: domain, resonant rank ``k``,
    truncation ``n_modes`` (None picks the default), the nonlinearity
    (builtin name, expression text, or a :class:`Nonlinearity`) with its
    parameter ``c``, quadrature order, solver tolerance, and an optional
    forced saddle geometry ``sc_case`` ("SC+", "SC-", or None to infer
    from the condition checks).
    """

    def __init__(self, domain=(0.0, math.pi), k=1, n_modes=None,
                 nonlinearity="arctan", c=None, quad_order=10,
                 cells_per_axis=None, tol=1e-9, max_iter=100, sc_case=None,
                 check_conditions=True):
        self.domain = domain
        self.k = k
        self.n_modes = n_modes
        self.nonlinearity = nonlinearity
        self.c = c
        self.quad_order = quad_order
        self.cells_per_axis = cells_per_axis
        self.tol = tol
        self.max_iter = max_iter
        self.sc_case = sc_case
        self.check_conditions = check_conditions

    def _build(self, f):
        domain = _as_domain(self.domain)
        nl = _as_nonlinearity(self.nonlinearity, self.c)
        quad = QuadratureSettings(order=self.quad_order,
                                  cells_per_axis=self.cells_per_axis)
        n = self.n_modes
        if n is None:
            probe = EigenBasis(domain, self.k + 8)
            dec = decompose(probe.pairs, self.k)
            n = 8 * (self.k + dec.m)
        problem = GalerkinProblem.build(domain, self.k, n, nl, quadrature=quad)
        problem.f_coeffs, problem.f_field = _as_f(f, problem, domain)
        return problem, nl

    def fit(self, f=None, y=None):
        """Solve for the right-hand side ``f``.

        ``f`` may be None (zero forcing), a coefficient vector of length
        ``n_modes``, an expression string in x (and y), or a callable.
        """
        problem, nl = self._build(f)
        case = self.sc_case
        self.conditions_ = None
        if case is None and self.check_conditions:
            reports, _, _, _, asym = evaluate_all(
                problem.basis, problem.decomposition, nl, problem.f_coeffs,
                problem.quadrature)
            self.conditions_ = reports
            self.asymptotics_ = asym
            if reports["SC+"].verdict == HOLDS:
                case = "SC+"
            elif reports["SC-"].verdict == HOLDS:
                case = "SC-"
        self.problem_ = problem
        self.results_ = multi_start_solve(problem, sc_case=case, tol=self.tol,
                                          max_iter=self.max_iter)
        if not self.results_:
            raise RuntimeError("no critical point found from the default starts")
        self.solution_ = self.results_[0]
        self.coefficients_ = self.solution_.coeffs
        _, self.residual_norm_ = verify_weak_residual(
            problem, self.coefficients_, 2 * problem.n)
        return self

    def _require_fitted(self):
        if not hasattr(self, "solution_"):
            raise NotFittedError("call fit before predict/score")

    def predict(self, X):
        """Evaluate the computed solution at the points ``X``."""
        self._require_fitted()
        points = check_points(X, self.problem_.basis.domain.dim)
        return self.problem_.basis.evaluate(self.coefficients_, *points)

    def score(self, X=None, y=None):
        """Negative extended weak residual; bigger is better, 0 is exact."""
        self._require_fitted()
        return -float(self.residual_norm_)


class ConditionChecker(BaseEstimator):
    """Fit-style wrapper producing solvability-condition reports.

    After ``fit``, ``reports_`` maps condition tags to reports,
    ``verdicts_`` to verdict strings, and ``solvable_`` states whether a
    divergence-condition sign is ray-certified.
    """

    def __init__(self, domain=(0.0, math.pi), k=1, n_modes=None,
                 nonlinearity="arctan", c=None, quad_order=10,
                 direction_count=64, t_max=1e8, t_points=32):
        self.domain = domain
        self.k = k
        self.n_modes = n_modes
        self.nonlinearity = nonlinearity
        self.c = c
        self.quad_order = quad_order
        self.direction_count = direction_count
        self.t_max = t_max
        self.t_points = t_points

    def fit(self, f=None, y=None):
        domain = _as_domain(self.domain)
        nl = _as_nonlinearity(self.nonlinearity, self.c)
        n = self.n_modes
        if n is None:
            probe = EigenBasis(domain, self.k + 8)
            dec = decompose(probe.pairs, self.k)
            n = 8 * (self.k + dec.m)
        quad = QuadratureSettings(order=self.quad_order)
        problem = GalerkinProblem.build(domain, self.k, n, nl, quadrature=quad)
        problem.f_coeffs, problem.f_field = _as_f(f, problem, domain)
        settings = ConditionSettings(t_max=self.t_max, t_points=self.t_points,
                                     direction_count=self.direction_count)
        reports, profiles, t_grid, directions, asym = evaluate_all(
            problem.basis, problem.decomposition, nl, problem.f_coeffs,
            quad, settings)
        self.problem_ = problem
        self.reports_ = reports
        self.profiles_ = profiles
        self.t_grid_ = t_grid
        self.asymptotics_ = asym
        self.verdicts_ = {tag: rep.verdict for tag, rep in reports.items()}
        self.solvable_ = (reports["SC+"].verdict == HOLDS
                          or reports["SC-"].verdict == HOLDS)
        return self
