import math

import numpy as np
import pytest

from resolab.basis import Domain, project
from resolab.nonlinearity import Nonlinearity, builtin
from resolab.quadrature import QuadratureSettings
from resolab.solver import (GalerkinProblem, default_starts, energy_split,
                            morse_index, multi_start_solve, newton_solve,
                            saddle_search, saddle_split, verify_weak_residual)

PI = math.pi
ZERO_G = Nonlinearity.from_text("0*s", antiderivative_text="0*s", name="zero")


def make_problem(n=8, k=2, nl=None, f=None, domain=None):
    return GalerkinProblem.build(domain or Domain.interval(0.0, PI), k, n,
                                 nl or ZERO_G, f_coeffs=f)


def test_energy_zero_at_origin():
    p = make_problem(nl=builtin("arctan"))
    assert p.energy(np.zeros(8)) == pytest.approx(0.0, abs=1e-14)
    assert np.allclose(p.gradient(np.zeros(8)), 0.0, atol=1e-12)


def test_energy_linear_closed_form():
    # g = 0: E(a) = 1/2 sum (lambda_i - lambda_k) a_i^2 - f.a
    p = make_problem()
    rng = np.random.default_rng(3)
    a = rng.normal(size=8)
    f = rng.normal(size=8)
    p.f_coeffs = f
    expect = 0.5 * np.dot(p.shifted, a * a) - np.dot(f, a)
    assert p.energy(a) == pytest.approx(expect, abs=1e-12)


def test_gradient_matches_finite_differences():
    p = make_problem(nl=builtin("arctan_cos", 1.0))
    rng = np.random.default_rng(5)
    h = 1e-6
    for _ in range(10):
        a = rng.normal(size=8)
        grad = p.gradient(a)
        for i in range(8):
            e = np.zeros(8)
            e[i] = h
            fd = (p.energy(a + e) - p.energy(a - e)) / (2 * h)
            assert grad[i] == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_hessian_matches_finite_differences():
    p = make_problem(nl=builtin("cauchy_cos", 2.0))
    rng = np.random.default_rng(9)
    a = rng.normal(size=8)
    hess = p.hessian(a)
    assert np.allclose(hess, hess.T)
    h = 1e-6
    for i in range(8):
        e = np.zeros(8)
        e[i] = h
        fd = (p.gradient(a + e) - p.gradient(a - e)) / (2 * h)
        assert np.allclose(hess[i], fd, rtol=1e-4, atol=1e-6)


def test_linear_solve_exact():
    # g = 0, f = phi_4, k = 2: a_4 = 1/(lambda_4 - lambda_2) = 1/12
    f = np.zeros(8)
    f[3] = 1.0
    p = make_problem(f=f)
    res = newton_solve(p)
    assert res.converged and res.iterations <= 2
    expect = np.zeros(8)
    expect[3] = 1.0 / 12.0
    assert np.allclose(res.coeffs, expect, atol=1e-12)
    _, rnorm = verify_weak_residual(p, res.coeffs, 16)
    assert rnorm <= 1e-10


def test_manufactured_solution():
    # u* known, f built from the weak form so u* is exact
    nl = builtin("arctan")
    dom = Domain.interval(0.0, PI)
    n, k = 16, 2
    probe = GalerkinProblem.build(dom, k, n, nl)
    star = np.zeros(n)
    star[k] = 0.5    # phi_{k+1}
    star[0] = 0.1    # phi_1
    u = probe.field(star)
    f = probe.shifted * star + probe.phi_w @ nl.g(u)
    p = GalerkinProblem.build(dom, k, n, nl, f_coeffs=f)
    results = multi_start_solve(p)
    found = min(results, key=lambda r: np.linalg.norm(r.coeffs - star))
    assert np.linalg.norm(found.coeffs - star) < 1e-9


def test_morse_index_linear():
    # pure quadratic: index = number of modes below the resonance
    p = make_problem(n=10, k=3)
    assert morse_index(p, np.zeros(10)) == 2


def test_saddle_split_geometries():
    p = make_problem(n=8, k=2)
    minus, plus = saddle_split(p, "SC+")
    assert list(np.flatnonzero(minus)) == [0]
    assert list(np.flatnonzero(plus)) == list(range(1, 8))
    minus, plus = saddle_split(p, "SC-")
    assert list(np.flatnonzero(minus)) == [0, 1]
    assert list(np.flatnonzero(plus)) == list(range(2, 8))
    with pytest.raises(ValueError):
        saddle_split(p, "mountain pass")


def test_saddle_and_newton_agree_on_linear():
    f = np.zeros(8)
    f[0], f[3] = 0.3, -0.7
    p = make_problem(f=f)
    direct = newton_solve(p)
    via_saddle = saddle_search(p, "SC+")
    assert via_saddle.converged
    assert np.allclose(via_saddle.coeffs, direct.coeffs, atol=1e-9)


def test_saddle_search_example_nonlinearity():
    p = make_problem(n=16, k=2, nl=builtin("paper_example", 1.0))
    res = saddle_search(p, "SC+")
    assert res.converged
    assert res.gradient_norm <= 1e-9
    assert res.morse_index >= 1
    # the trace is monotone-ish at the end: final gradient tiny
    assert res.trace[-1][1] <= 1e-9


def test_sc_minus_geometry_converges():
    p = make_problem(n=16, k=2, nl=builtin("vanishing_log_negated"))
    res = saddle_search(p, "SC-")
    assert res.converged
    _, rnorm = verify_weak_residual(p, res.coeffs, 32)
    assert rnorm <= 1e-8


def test_energy_split_reconstructs_total():
    p = make_problem(n=12, k=3, nl=builtin("arctan_cos", 1.0))
    rng = np.random.default_rng(17)
    p.f_coeffs = rng.normal(size=12)
    for _ in range(5):
        a = rng.normal(size=12)
        split = energy_split(p, a)
        assert split.total == pytest.approx(p.energy(a), abs=1e-9)


def test_energy_split_hat_concavity():
    # the hat block contributes at most -(c1/2) |u_hat|_H^2
    p = make_problem(n=12, k=3, nl=builtin("arctan"))
    gaps = p.gap()
    rng = np.random.default_rng(23)
    lam = p.eigenvalues
    for _ in range(20):
        a = rng.normal(size=12)
        hat = project(a, p.decomposition, "hat")
        split = energy_split(p, a)
        h_sq = float(np.dot(lam, hat * hat))
        assert split.hat_quadratic <= -0.5 * gaps.c1 * h_sq + 1e-10


def test_weak_residual_truncation_study():
    # residual at N_test = N equals the gradient norm; growing N_test can
    # only reveal more defect
    p = make_problem(n=8, k=2, nl=builtin("arctan"))
    res = newton_solve(p, start=0.1 * np.ones(8))
    _, r_same = verify_weak_residual(p, res.coeffs, 8)
    assert r_same == pytest.approx(res.gradient_norm, abs=1e-12)
    _, r_twice = verify_weak_residual(p, res.coeffs, 16)
    _, r_four = verify_weak_residual(p, res.coeffs, 32)
    assert r_twice <= r_four + 1e-12
    with pytest.raises(ValueError):
        verify_weak_residual(p, res.coeffs, 4)


def test_default_starts_cover_resonant_directions():
    p = make_problem(n=8, k=2)
    starts = default_starts(p)
    assert any(np.all(s == 0) for s in starts)
    assert any(s[1] > 0 for s in starts) and any(s[1] < 0 for s in starts)


def test_multi_start_linear_resonant_family():
    # g = 0 and f orthogonal to the kernel: critical points form a line
    # along the resonant mode, so distinct seeds land on distinct members
    f = np.zeros(8)
    f[2] = 1.0
    p = make_problem(f=f)
    results = multi_start_solve(p)
    assert all(r.converged for r in results)
    off_kernel = [i for i in range(8) if i != 1]
    for r in results:
        assert np.allclose(r.coeffs[off_kernel], results[0].coeffs[off_kernel],
                           atol=1e-9)


def test_multi_start_unique_with_strict_nonlinearity():
    f = np.zeros(8)
    f[2] = 0.5
    p = make_problem(nl=builtin("arctan"), f=f)
    results = multi_start_solve(p)
    assert len(results) == 1
    assert results[0].converged


def test_result_serialization():
    p = make_problem(nl=builtin("arctan"))
    res = newton_solve(p)
    d = res.to_dict()
    assert d["converged"] is True
    assert len(d["coefficients"]) == 8
