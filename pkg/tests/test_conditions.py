import math

import numpy as np
import pytest

from resolab.basis import Domain, EigenBasis, decompose
from resolab.conditions import (ConditionEvaluator, ConditionSettings,
                                classify_sc, direction_samples, evaluate_all,
                                ll_margin, ll_sc_bridge, pll_margin)
from resolab.nonlinearity import builtin

PI = math.pi


def make_evaluator(n=12, k=1, settings=ConditionSettings()):
    basis = EigenBasis(Domain.interval(0.0, PI), n)
    dec = decompose(basis.pairs, k)
    return basis, dec, ConditionEvaluator(basis, dec, settings=settings)


def test_direction_samples_simple_eigenvalue():
    _, dec, _ = make_evaluator(k=2)
    dirs = direction_samples(dec)
    assert np.array_equal(dirs, [[1.0], [-1.0]])


def test_direction_samples_multiplicity_two():
    basis = EigenBasis(Domain.rectangle(1.0, 1.0), 8)
    dec = decompose(basis.pairs, 2)
    dirs = direction_samples(dec, 64)
    assert dirs.shape == (64, 2)
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)
    # antipodes are included as the second half
    assert np.allclose(dirs[:32], -dirs[32:])


def test_ll_margin_closed_form():
    # arctan on (0,pi), k=1, f = s*phi_1: margin along +phi_1 is
    # (pi/2) int phi_1 - s = sqrt(2 pi) - s since phi_1 >= 0
    _, dec, ev = make_evaluator(k=1)
    asym = builtin("arctan").asymptotics()
    for s in (0.0, 1.0, 2.0):
        f = np.zeros(12)
        f[0] = s
        got = ll_margin(ev, asym, f, np.array([1.0]))
        assert got == pytest.approx(math.sqrt(2 * PI) - s, abs=2e-3)


def test_margin_antipodal_symmetry_even_mode():
    # phi_2 changes sign, f = 0: margins at +-phi_2 coincide for odd g
    _, dec, ev = make_evaluator(k=2)
    asym = builtin("arctan").asymptotics()
    up = ll_margin(ev, asym, np.zeros(12), np.array([1.0]))
    dn = ll_margin(ev, asym, np.zeros(12), np.array([-1.0]))
    assert up == pytest.approx(dn, abs=1e-10)
    # and both equal (pi/2) int |phi_2| = (pi/2) * sqrt(2/pi) * 2 = sqrt(2 pi)
    assert up == pytest.approx(math.sqrt(2 * PI), rel=2e-3)


def test_pll_margin_matches_ll_for_arctan():
    _, dec, ev = make_evaluator(k=1)
    asym = builtin("arctan").asymptotics()
    f = np.zeros(12)
    f[0] = 0.7
    d = np.array([1.0])
    assert pll_margin(ev, asym, f, d) == pytest.approx(
        ll_margin(ev, asym, f, d), abs=1e-2)


def test_margin_requires_limits():
    _, dec, ev = make_evaluator(k=1)
    asym = builtin("arctan_cos", 10.0).asymptotics()
    with pytest.raises(ValueError):
        ll_margin(ev, asym, np.zeros(12), np.array([1.0]))
    # ray slopes of G still exist, so the potential variant works
    pll_margin(ev, asym, np.zeros(12), np.array([1.0]))


def test_bridge_predicts_ray_slope():
    # lim J(t)/t equals the signed margin; compare at t = 1e6
    _, dec, ev = make_evaluator(k=1)
    nl = builtin("arctan")
    asym = nl.asymptotics()
    f = np.zeros(12)
    f[0] = 0.5
    d = np.array([1.0])
    t = 1e6
    profile = ev.ray_profile(nl, f, d, np.array([t]))
    assert profile[0] / t == pytest.approx(ll_sc_bridge(ev, asym, f, d),
                                           abs=1e-2)


def test_classify_sc_increasing():
    t = np.logspace(0, 8, 32)
    profiles = [np.log(t) + 1.0, 0.5 * np.log(t)]
    reports = classify_sc(profiles, t)
    assert reports["SC+"].verdict == "holds"
    assert reports["SC+"].ray_certified
    assert reports["SC-"].verdict == "fails"


def test_classify_sc_flat_is_indeterminate():
    t = np.logspace(0, 8, 32)
    reports = classify_sc([np.ones_like(t)], t)
    assert reports["SC+"].verdict == "indeterminate"
    assert reports["SC-"].verdict == "indeterminate"
    assert not reports["SC+"].ray_certified


def test_classify_sc_mixed_directions():
    t = np.logspace(0, 8, 32)
    reports = classify_sc([np.log(t), -np.log(t)], t)
    assert reports["SC+"].verdict == "indeterminate"
    assert reports["SC-"].verdict == "indeterminate"


def test_evaluate_all_arctan():
    basis = EigenBasis(Domain.interval(0.0, PI), 12)
    dec = decompose(basis.pairs, 1)
    reports, profiles, t_grid, dirs, asym = evaluate_all(
        basis, dec, builtin("arctan"), np.zeros(12))
    verdicts = {tag: r.verdict for tag, r in reports.items()}
    assert verdicts == {"LL+": "holds", "LL-": "fails",
                        "PLL+": "holds", "PLL-": "fails",
                        "SC+": "holds", "SC-": "fails"}
    assert len(profiles) == len(dirs) == 2
    assert t_grid.shape == (32,)


def test_evaluate_all_vanishing_log():
    basis = EigenBasis(Domain.interval(0.0, PI), 12)
    dec = decompose(basis.pairs, 2)
    reports, *_ = evaluate_all(basis, dec, builtin("vanishing_log"),
                               np.zeros(12))
    assert reports["LL+"].verdict == "fails"
    assert reports["LL-"].verdict == "fails"
    assert reports["PLL+"].verdict == "fails"
    assert reports["PLL-"].verdict == "fails"
    assert reports["SC+"].verdict == "holds"
    assert reports["SC+"].ray_certified


def test_evaluate_all_negated_mirror():
    basis = EigenBasis(Domain.interval(0.0, PI), 12)
    dec = decompose(basis.pairs, 2)
    reports, *_ = evaluate_all(basis, dec, builtin("vanishing_log_negated"),
                               np.zeros(12))
    assert reports["SC-"].verdict == "holds"
    assert reports["SC+"].verdict == "fails"


def test_boundary_forcing_kills_pll():
    # f tuned exactly to the two-sided threshold: strictness fails
    basis = EigenBasis(Domain.interval(0.0, PI), 12)
    dec = decompose(basis.pairs, 1)
    f = np.zeros(12)
    f[0] = math.sqrt(2 * PI)  # analytic flip point for arctan-type limits
    reports, *_ = evaluate_all(basis, dec, builtin("arctan_cos", 1.0), f)
    assert reports["PLL+"].verdict == "fails"
    inside = f.copy()
    inside[0] = 1.0
    reports, *_ = evaluate_all(basis, dec, builtin("arctan_cos", 1.0), inside)
    assert reports["PLL+"].verdict == "holds"


def test_report_serialization():
    basis = EigenBasis(Domain.interval(0.0, PI), 10)
    dec = decompose(basis.pairs, 1)
    reports, *_ = evaluate_all(basis, dec, builtin("arctan"), np.zeros(10))
    d = reports["SC+"].to_dict()
    assert d["condition"] == "SC+"
    assert d["verdict"] == "holds"
    assert d["ray_certified"] is True
