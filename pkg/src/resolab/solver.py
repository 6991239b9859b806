"""Critical-point search for the resonant energy functional.

The functional is restricted to the span of the first N eigenfunctions
(trial space = test space), where the quadratic part is diagonal:

    E(a) = 1/2 sum_i (lambda_i - lambda_k) a_i^2 + int G(u) - int f u,
    u = sum_i a_i phi_i.

Solvers: damped Newton on the gradient, and a saddle-aware alternating
ascent/descent warm start matching the geometry of the two divergence
cases, polished by Newton.  Converged points are verified against the
weak form with test functions beyond the trial space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import (Domain, EigenBasis, GapConstants, SpectralDecomposition,
                    decompose, gap_constants, project)
from .nonlinearity import Nonlinearity
from .quadrature import QuadratureSettings


@dataclass
class GalerkinProblem:
    """Truncated problem data with cached quadrature geometry."""

    basis: EigenBasis
    decomposition: SpectralDecomposition
    nonlinearity: Nonlinearity
    f_coeffs: np.ndarray
    f_field: object = None   # optional callable on the domain, used for
                             # residual checks beyond the trial space
    quadrature: QuadratureSettings = field(default_factory=QuadratureSettings)

    def __post_init__(self):
        self.f_coeffs = np.asarray(self.f_coeffs, dtype=float)
        n = len(self.basis)
        if self.f_coeffs.shape != (n,):
            raise ValueError(f"f needs {n} coefficients, got {self.f_coeffs.shape}")
        if not self.decomposition.bar_indices:
            raise ValueError("resonant eigenspace is empty")
        self.points, self.weights = self.basis.quadrature_grid(self.quadrature)
        self.phi = self.basis.matrix(*self.points)
        self.phi_w = self.phi * self.weights
        self.eigenvalues = self.basis.eigenvalues
        self.lambda_k = self.eigenvalues[self.decomposition.k - 1]
        self.shifted = self.eigenvalues - self.lambda_k

    @property
    def n(self) -> int:
        return len(self.basis)

    @classmethod
    def build(cls, domain: Domain, k: int, n: int, nonlinearity: Nonlinearity,
              f_coeffs=None, f_field=None,
              quadrature: QuadratureSettings = QuadratureSettings(),
              tie_tolerance: float = 1e-9) -> "GalerkinProblem":
        basis = EigenBasis(domain, n)
        dec = decompose(basis.pairs, k, tie_tolerance)
        problem = cls(basis, dec, nonlinearity,
                      f_coeffs=np.zeros(n) if f_coeffs is None else f_coeffs,
                      f_field=f_field, quadrature=quadrature)
        if f_field is not None and f_coeffs is None:
            problem.f_coeffs = problem.project_field(f_field)
        return problem

    def project_field(self, fn) -> np.ndarray:
        """L2 projection of a pointwise field onto the trial basis."""
        values = np.asarray(fn(*self.points), dtype=float)
        return self.phi_w @ values

    def field(self, a: np.ndarray) -> np.ndarray:
        return np.asarray(a, dtype=float) @ self.phi

    def energy(self, a: np.ndarray) -> float:
        a = np.asarray(a, dtype=float)
        u = self.field(a)
        quad_part = 0.5 * float(np.dot(self.shifted, a * a))
        g_part = float(np.dot(self.weights, self.nonlinearity.G(u)))
        return quad_part + g_part - float(np.dot(self.f_coeffs, a))

    def gradient(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        u = self.field(a)
        return self.shifted * a + self.phi_w @ self.nonlinearity.g(u) - self.f_coeffs

    def hessian(self, a: np.ndarray) -> np.ndarray:
        u = self.field(np.asarray(a, dtype=float))
        gp = self.nonlinearity.g_prime(u)
        mat = self.phi_w * gp @ self.phi.T
        mat = 0.5 * (mat + mat.T)
        return np.diag(self.shifted) + mat

    def gap(self) -> GapConstants:
        return gap_constants(self.basis.pairs, self.decomposition)


@dataclass
class EnergySplit:
    """The proof's four-way decomposition of the energy at a point."""

    hat_quadratic: float      # concave part, below the resonance
    tilde_quadratic: float    # coercive part, above the resonance
    resonant_drive: float     # int G(u) - int f_bar u
    orthogonal_coupling: float  # int f_perp u_hat + int f_perp u_tilde

    @property
    def total(self) -> float:
        return (self.hat_quadratic + self.tilde_quadratic
                + self.resonant_drive - self.orthogonal_coupling)


def energy_split(problem: GalerkinProblem, a: np.ndarray) -> EnergySplit:
    a = np.asarray(a, dtype=float)
    dec = problem.decomposition
    hat = project(a, dec, "hat")
    tilde = project(a, dec, "tilde")
    f_bar = project(problem.f_coeffs, dec, "bar")
    f_perp = problem.f_coeffs - f_bar
    u = problem.field(a)
    g_part = float(np.dot(problem.weights, problem.nonlinearity.G(u)))
    return EnergySplit(
        hat_quadratic=0.5 * float(np.dot(problem.shifted, hat * hat)),
        tilde_quadratic=0.5 * float(np.dot(problem.shifted, tilde * tilde)),
        resonant_drive=g_part - float(np.dot(f_bar, a)),
        orthogonal_coupling=float(np.dot(f_perp, hat) + np.dot(f_perp, tilde)),
    )


@dataclass
class SolveResult:
    coeffs: np.ndarray
    energy: float
    gradient_norm: float
    residual_norm: float
    morse_index: int
    iterations: int
    converged: bool
    trace: list[tuple[float, float]]      # (energy, gradient norm) per step
    iterates: np.ndarray                  # row per accepted iterate
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"coefficients": self.coeffs.tolist(),
                "energy": self.energy,
                "gradient_norm": self.gradient_norm,
                "residual_norm": self.residual_norm,
                "morse_index": self.morse_index,
                "iterations": self.iterations,
                "converged": self.converged,
                "trace": [list(t) for t in self.trace],
                "notes": self.notes}


def morse_index(problem: GalerkinProblem, a: np.ndarray) -> int:
    eigs = np.linalg.eigvalsh(problem.hessian(a))
    cut = -1e-8 * max(1.0, float(np.max(np.abs(eigs))))
    return int(np.count_nonzero(eigs < cut))


def _finish(problem, a, trace, iterates, iterations, tol, notes):
    grad = problem.gradient(a)
    gnorm = float(np.linalg.norm(grad))
    return SolveResult(
        coeffs=a.copy(),
        energy=problem.energy(a),
        gradient_norm=gnorm,
        residual_norm=gnorm,   # trial = test space, so identical at N_test=N
        morse_index=morse_index(problem, a),
        iterations=iterations,
        converged=gnorm <= tol,
        trace=trace,
        iterates=np.array(iterates),
        notes=notes,
    )


def newton_solve(problem: GalerkinProblem, start=None, max_iter: int = 100,
                 tol: float = 1e-9) -> SolveResult:
    """Damped Newton on gradient = 0, backtracking on |gradient|^2."""
    n = problem.n
    a = np.zeros(n) if start is None else np.asarray(start, dtype=float).copy()
    if a.shape != (n,):
        raise ValueError(f"start needs length {n}")
    notes: list[str] = []
    trace = [(problem.energy(a), float(np.linalg.norm(problem.gradient(a))))]
    iterates = [a.copy()]
    for it in range(1, max_iter + 1):
        grad = problem.gradient(a)
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= tol:
            return _finish(problem, a, trace, iterates, it - 1, tol, notes)
        hess = problem.hessian(a)
        try:
            step = np.linalg.solve(hess, -grad)
            if not np.all(np.isfinite(step)):
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            step = np.linalg.pinv(hess) @ (-grad)
            notes.append(f"iteration {it}: singular Hessian, pseudo-inverse step")
        damping = 1.0
        target = gnorm * gnorm
        while damping >= 1e-12:
            cand = a + damping * step
            g_cand = problem.gradient(cand)
            cnorm2 = float(np.dot(g_cand, g_cand))
            if cnorm2 < target:
                break
            damping *= 0.5
        else:
            notes.append(f"iteration {it}: line search stalled at minimum step")
            cand = a + 1e-12 * step
        a = cand
        trace.append((problem.energy(a), float(np.linalg.norm(problem.gradient(a)))))
        iterates.append(a.copy())
    result = _finish(problem, a, trace, iterates, max_iter, tol, notes)
    if not result.converged:
        result.notes.append(f"newton did not reach tolerance {tol:g} "
                            f"within {max_iter} iterations")
    return result


def saddle_split(problem: GalerkinProblem, sc_case: str):
    """Index masks of the concave (maximized) and convex (minimized) blocks."""
    dec = problem.decomposition
    if sc_case == "SC+":
        minus = dec.mask("hat")
        plus = dec.mask("bar") | dec.mask("tilde")
    elif sc_case == "SC-":
        minus = dec.mask("hat") | dec.mask("bar")
        plus = dec.mask("tilde")
    else:
        raise ValueError(f"sc_case must be 'SC+' or 'SC-', got {sc_case!r}")
    return minus, plus


def saddle_search(problem: GalerkinProblem, sc_case: str, start=None,
                  max_outer: int = 2000, tol: float = 1e-9,
                  patience: int = 100) -> SolveResult:
    """Alternating extremization matched to the saddle geometry.

    Ascent on the finite block where the quadratic form is concave,
    descent on the complement, then a Newton polish.  Per-mode steps are
    capped by the local curvature |lambda_i - lambda_k| (the spectral-gap
    steps of the two resonance-adjacent modes are kept exactly).
    """
    n = problem.n
    lam = problem.eigenvalues
    dec = problem.decomposition
    k, m = dec.k, dec.m
    minus, plus = saddle_split(problem, sc_case)
    a = np.zeros(n) if start is None else np.asarray(start, dtype=float).copy()

    gap_minus = (lam[k - 1] - lam[k - 2]) if k >= 2 else 1.0
    gap_plus = lam[k + m - 1] - lam[k - 1]
    curvature = np.abs(problem.shifted)
    step_minus = 1.0 / np.maximum(curvature, gap_minus)
    step_plus = 1.0 / np.maximum(curvature, gap_plus)

    notes: list[str] = []
    trace = [(problem.energy(a), float(np.linalg.norm(problem.gradient(a))))]
    iterates = [a.copy()]
    best = math.inf
    since_best = 0
    polish_gate = max(1e-3, 1e3 * tol)
    outer = 0
    for outer in range(1, max_outer + 1):
        grad = problem.gradient(a)
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= polish_gate:
            break
        if gnorm < best * (1.0 - 1e-6):
            best, since_best = gnorm, 0
        else:
            since_best += 1
            if since_best > patience:
                notes.append("alternating phase stalled; polishing anyway")
                break
        if minus.any():
            a[minus] += step_minus[minus] * grad[minus]
            grad = problem.gradient(a)
        a[plus] -= step_plus[plus] * grad[plus]
        trace.append((problem.energy(a),
                      float(np.linalg.norm(problem.gradient(a)))))
        iterates.append(a.copy())

    polished = newton_solve(problem, start=a, tol=tol)
    merged = SolveResult(
        coeffs=polished.coeffs,
        energy=polished.energy,
        gradient_norm=polished.gradient_norm,
        residual_norm=polished.residual_norm,
        morse_index=polished.morse_index,
        iterations=outer + polished.iterations,
        converged=polished.converged,
        trace=trace + polished.trace[1:],
        iterates=np.vstack([np.array(iterates), polished.iterates[1:]])
        if len(polished.iterates) > 1 else np.array(iterates),
        notes=notes + polished.notes,
    )
    if not merged.converged:
        merged.notes.append("saddle search did not converge")
    return merged


def verify_weak_residual(problem: GalerkinProblem, a: np.ndarray,
                         n_test: int):
    """Weak-form residual against the first ``n_test`` test functions.

    Test functions beyond the trial space are included; the forcing term
    there uses the pointwise field when available, else its trial-space
    representation (zero tail).  Returns (vector, Euclidean norm).
    """
    n = problem.n
    if n_test < n:
        raise ValueError("n_test must be at least the trial dimension")
    a = np.asarray(a, dtype=float)
    test_basis = EigenBasis(problem.basis.domain, n_test)
    points, weights = test_basis.quadrature_grid(problem.quadrature)
    phi = test_basis.matrix(*points)
    phi_w = phi * weights
    u = a @ phi[:n, :]
    lam = test_basis.eigenvalues
    lam_k = problem.lambda_k
    a_ext = np.concatenate([a, np.zeros(n_test - n)])
    if problem.f_field is not None:
        f_terms = phi_w @ np.asarray(problem.f_field(*points), dtype=float)
    else:
        f_terms = np.concatenate([problem.f_coeffs, np.zeros(n_test - n)])
    residual = (lam - lam_k) * a_ext + phi_w @ problem.nonlinearity.g(u) - f_terms
    return residual, float(np.linalg.norm(residual))


def default_starts(problem: GalerkinProblem) -> list[np.ndarray]:
    """Multi-start seeds: origin, nudges along each resonant mode, and the
    linear solution of the nonresonant part."""
    n = problem.n
    dec = problem.decomposition
    starts = [np.zeros(n)]
    eps = 0.1 * float(np.linalg.norm(problem.f_coeffs)) + 0.1
    for j in dec.bar_indices:
        for sign in (+1.0, -1.0):
            seed = np.zeros(n)
            seed[j - 1] = sign * eps
            starts.append(seed)
    linear = np.zeros(n)
    off_bar = ~dec.mask("bar")
    linear[off_bar] = problem.f_coeffs[off_bar] / problem.shifted[off_bar]
    starts.append(linear)
    return starts


def multi_start_solve(problem: GalerkinProblem, sc_case: str | None = None,
                      starts=None, tol: float = 1e-9,
                      max_iter: int = 100) -> list[SolveResult]:
    """Solve from every start, deduplicate, sort by energy then coefficients."""
    if starts is None:
        starts = default_starts(problem)
    results = []
    for seed in starts:
        if sc_case in ("SC+", "SC-"):
            res = saddle_search(problem, sc_case, start=seed, tol=tol)
        else:
            res = newton_solve(problem, start=seed, tol=tol, max_iter=max_iter)
        results.append(res)
    converged = [r for r in results if r.converged]
    pool = converged if converged else results
    distinct: list[SolveResult] = []
    for res in pool:
        if all(np.linalg.norm(res.coeffs - other.coeffs) > 1e-6
               for other in distinct):
            distinct.append(res)
    distinct.sort(key=lambda r: (r.energy, tuple(r.coeffs)))
    return distinct
