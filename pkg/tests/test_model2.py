"""Insect/tree system: spectrum, threshold, barriers, obstruction."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from travwave.errors import InvalidParameterError, RegimeError
from travwave.model import Model2Params, make_cubic_model, make_weed_model
from travwave.model2 import (c_sharp, case2_demo, char_poly, check_drate,
                             lambda_min, p_at_lambda_min, quasimonotone_check,
                             solve_vtheta, spectrum, subsolution,
                             supersolution)

P111 = Model2Params(1.0, 1.0, 1.0)


def test_char_poly_values():
    assert np.allclose(char_poly(-1.0, P111), [1.0, -1.0, -1.0, 1.0])
    assert np.allclose(char_poly(1.0, P111), [1.0, 1.0, -1.0, -1.0])
    # p(0) = -kappa1 kappa2 / c > 0 for leftward waves
    assert char_poly(-0.5, P111)[-1] > 0.0
    with pytest.raises(ZeroDivisionError):
        char_poly(0.0, P111)


def test_lambda_min_is_critical_point():
    for c in (-0.5, -1.0, -2.0):
        lm = lambda_min(c, P111)
        dp = np.polyder(char_poly(c, P111))
        assert lm > 0.0
        assert abs(np.polyval(dp, lm)) < 1e-12


def test_c_sharp_unit_parameters():
    cs = c_sharp(P111)
    assert cs == pytest.approx(-1.0, abs=1e-12)
    # hand factorization at the threshold: p = (l-1)^2 (l+1)
    assert np.allclose(char_poly(cs, P111), [1.0, -1.0, -1.0, 1.0])
    assert abs(p_at_lambda_min(cs, P111)) < 1e-9


def test_critical_value_sign_split():
    cs = c_sharp(P111)
    for c in (cs - 0.5, cs - 0.1, cs):
        assert p_at_lambda_min(c, P111) <= 1e-12
    for c in (-0.9, -0.5, -0.1):
        assert p_at_lambda_min(c, P111) > 0.0
    # the critical value is strictly increasing in c on (-inf, 0), which
    # makes the threshold root unique
    cs_grid = np.linspace(-2.5, -0.05, 25)
    vals = [p_at_lambda_min(c, P111) for c in cs_grid]
    assert all(a < b for a, b in zip(vals, vals[1:]))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.2, 3.0), st.floats(0.2, 3.0))
def test_c_sharp_root_property(k1, k2, d):
    params = Model2Params(k1, k2, d)
    cs = c_sharp(params)
    assert cs < 0.0
    scale = max(1.0, k1 * k2 / abs(cs))
    assert abs(p_at_lambda_min(cs, params)) <= 1e-9 * scale
    # below the threshold the inequality holds (two positive real roots)
    assert p_at_lambda_min(1.5 * cs, params) < 0.0


def test_spectrum_boundary_case():
    s = spectrum(-1.0, P111)
    assert s.classification == "repeated_real"
    roots = np.sort(s.roots.real)
    assert roots[0] == pytest.approx(-1.0, abs=1e-6)
    assert roots[1] == pytest.approx(1.0, abs=1e-5)
    assert roots[2] == pytest.approx(1.0, abs=1e-5)


def test_spectrum_lemma71_regime():
    s = spectrum(-0.9, P111)
    assert s.classification == "lemma71_regime"
    assert s.lambda1 < 0.0 < s.a and s.b > 0.0
    # every reported eigenvalue satisfies the cubic to 1e-10
    coeffs = char_poly(-0.9, P111)
    assert np.max(np.abs(np.polyval(coeffs, s.roots))) <= 1e-10
    # eigenvectors: (1, l, -k1/(c l)) against the Jacobian
    A = np.array([[0.0, 1.0, 0.0], [1.0, 0.9, -1.0], [1.0 / 0.9, 0.0, 0.0]])
    for lam in s.roots:
        v = np.array([1.0, lam, -1.0 / (-0.9 * lam)])
        assert np.max(np.abs(A @ v - lam * v)) <= 1e-9
    # w2, w3 are the real/imaginary parts of the complex eigenvector
    v2 = np.array([1.0, s.a + 1j * s.b, -1.0 / (-0.9 * (s.a + 1j * s.b))])
    assert np.allclose(s.w2, v2.real, atol=1e-12)
    assert np.allclose(s.w3, v2.imag, atol=1e-12)


def test_spectrum_regime_validation():
    with pytest.raises(ZeroDivisionError):
        spectrum(0.0, P111)
    with pytest.raises(InvalidParameterError):
        spectrum(0.5, P111)


def test_drate_condition():
    check_drate(make_weed_model(1.0 / 3.0).f, 1.0)
    check_drate(make_cubic_model(0.15, 4.5).f, 1.0)
    with pytest.raises(InvalidParameterError):
        check_drate(make_cubic_model(0.15, 8.0).f, 1.0)  # f/u -> -1.2 < -1


def test_quasimonotone_partials():
    rep = quasimonotone_check(P111)
    assert rep.passed
    # symbolic partials at a sample: dF2/du = k2 theta, dF3/dv = k1 (1-theta)
    rep2 = quasimonotone_check(Model2Params(2.0, 3.0, 1.0),
                               samples=[(0.8, 0.2, 0.5)])
    assert rep2.passed
    with pytest.raises(InvalidParameterError):
        quasimonotone_check(P111, samples=[(0.3, 0.5, 0.5)])  # v > u


def test_supersolution_structure(m2_pipeline):
    sup = supersolution(m2_pipeline["spatial"], m2_pipeline["params"], -0.9)
    u, v = sup.u_values, sup.v_values
    vstar = m2_pipeline["params"].v_star
    assert np.all(v == np.minimum(u, vstar))
    assert float(np.max(v)) == pytest.approx(vstar, abs=1e-12)
    assert np.max(sup.residuals["second"]) <= 1e-6
    assert np.max(sup.residuals["third"]) <= 1e-6
    # third-equation residual has the closed form kappa1 (1-theta)(v+ - u) <= 0
    k1 = m2_pipeline["params"].kappa1
    expected = k1 * (1.0 - sup.theta_values) * (v - u)
    assert np.allclose(sup.residuals["third"], expected, atol=1e-12)


def test_supersolution_requires_leftward_wave(m2_pipeline):
    with pytest.raises(RegimeError):
        supersolution(m2_pipeline["spatial"], m2_pipeline["params"], 0.1)


def test_lambda0_formula():
    # explicit relaxation rate at c=-1 with kappa2 Theta + d = 2
    c, load = -1.0, 2.0
    lam0 = (-c - np.sqrt(c * c + 4.0 * load)) / 2.0
    assert lam0 == pytest.approx(-1.0, abs=1e-15)


def test_subsolution_structure(m2_pipeline):
    sub = subsolution(m2_pipeline["spatial"], m2_pipeline["alpha"],
                      m2_pipeline["params"], -0.9)
    assert np.min(sub.residuals["second"]) >= -1e-6
    assert np.min(sub.residuals["third"]) >= -1e-6
    # junction slopes at the first descending V-zero: left <= 0 <= right
    assert sub.meta["dv_left"] <= 0.0 <= sub.meta["dv_right"]
    # window length within two rotations of the spiral
    s = spectrum(-0.9, m2_pipeline["params"])
    assert sub.meta["x1"] - sub.meta["x0"] <= 4.0 * np.pi / s.b
    # theta^- climbs to 1 on the right
    assert sub.theta_values[-1] >= 1.0 - 1e-3
    # path stays inside the invariant box
    assert np.all(sub.v_values >= 0.0) and np.all(sub.v_values <= 1.0)
    assert np.all((0.0 <= sub.theta_values) & (sub.theta_values <= 1.0))
    assert np.all(sub.v_values <= sub.u_values + 1e-12)


def test_subsolution_regime_gate(m2_pipeline):
    with pytest.raises(RegimeError):
        subsolution(m2_pipeline["spatial"], m2_pipeline["alpha"],
                    m2_pipeline["params"], -1.5)


def test_solution_theta_identity(m2_pipeline):
    sol = solve_vtheta(m2_pipeline["spatial"], m2_pipeline["alpha"],
                       m2_pipeline["params"], -0.9)
    # the theta relation holds exactly in the scheme's own discretization
    assert np.max(np.abs(sol.residuals["third"])) <= 1e-8
    assert np.max(np.abs(sol.residuals["second"])) <= 1e-6
    assert sol.meta["theta_right_end"] >= 1.0 - 1e-3
    assert abs(sol.meta["v_right_end"] - 0.5) <= 1e-3
    # asymptotic targets at the left end
    assert abs(sol.v_values[0]) <= 1e-3 and abs(sol.theta_values[0]) <= 1e-3


def test_solution_mesh_refinement(m2_pipeline):
    sol = solve_vtheta(m2_pipeline["spatial"], m2_pipeline["alpha"],
                       m2_pipeline["params"], -0.9)
    fine = solve_vtheta(m2_pipeline["spatial"], m2_pipeline["alpha"],
                        m2_pipeline["params"], -0.9, h=0.01)
    vi = np.interp(sol.x_nodes, fine.x_nodes, fine.v_values)
    assert np.max(np.abs(vi - sol.v_values)) < 1e-4


def test_case2_demo(m2_pipeline):
    rep = case2_demo(P111, -0.9)
    assert rep.within_three_periods
    assert rep.component in ("V", "Theta")
    # rotation rate ~ b
    assert abs(rep.rotation_rate - rep.b) / rep.b < 0.05
    rep2 = case2_demo(P111, -0.9, seed_amplitude=2e-3)
    assert abs(rep2.winding - rep.winding) <= 1.0


def test_case2_demo_eigvec1_seed_violates_immediately():
    s = spectrum(-0.9, P111)
    # v1 = (1, lambda1, -k1/(c lambda1)) has a negative Theta entry
    rep = case2_demo(P111, -0.9, seed_direction=s.eigvec1)
    assert rep.x_violation == 0.0 and rep.winding == 0.0
    rep_neg = case2_demo(P111, -0.9, seed_direction=-s.eigvec1)
    assert rep_neg.x_violation == 0.0


def test_case2_demo_regime_gate():
    with pytest.raises(RegimeError):
        case2_demo(P111, -1.5)
