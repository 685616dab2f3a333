"""Optimality system: shooting map, optimal profiles, effort table."""

from __future__ import annotations

import numpy as np
import pytest

from travwave.control_construct import finite_cost_control
from travwave.errors import InvalidParameterError, NoSolutionError
from travwave.model import make_logistic_model
from travwave.phaseplane import stable_manifold, unstable_manifold
from travwave.pmp import effort_curve, optimal_profile, pmp_residual, shoot_from


@pytest.fixture(scope="module")
def manifolds01(weed):
    flat = unstable_manifold(weed, -0.1, u_stop=1.0)
    sharp = stable_manifold(weed, -0.1, u_stop=0.0)
    return flat, sharp


def test_shooting_map_changes_sign(weed, manifolds01):
    flat, sharp = manifolds01
    pf, ps = flat.interp_p(), sharp.interp_p()
    u_bar = flat.termination_u
    grid = np.linspace(weed.u_star + 0.01, u_bar - 0.01, 12)
    phis = [shoot_from(weed, -0.1, u1, pf, ps).phi for u1 in grid]
    signs = np.sign(phis)
    assert signs[0] > 0 and signs[-1] < 0
    assert np.any(signs[:-1] * signs[1:] < 0)


def test_shot_failure_mode_near_crash(weed, manifolds01):
    # close to the crash point of P_flat the control is exhausted at once
    flat, sharp = manifolds01
    res = shoot_from(weed, -0.1, flat.termination_u - 5e-4,
                     flat.interp_p(), sharp.interp_p())
    assert res.status in ("beta_zero", "p_zero")
    assert res.phi < 0.0


def test_trivial_profile_at_natural_speed(weed, c_star_weed):
    prof = optimal_profile(weed, c_star_weed, c_star=c_star_weed)
    assert prof.cost == 0.0
    assert prof.u1 == prof.u2 == weed.u_star
    assert pmp_residual(prof, weed).yu_max == 0.0


def test_below_natural_speed_is_trivial(weed, c_star_weed):
    prof = optimal_profile(weed, -0.5, c_star=c_star_weed)
    assert prof.cost == 0.0


def test_optimal_profile_invariants(weed, c_star_weed, opt01, manifolds01):
    prof = opt01
    assert weed.u_star < prof.u1 < prof.u2 < 1.0
    arc = prof.arc
    assert float(arc.beta_values[0]) <= 1e-6
    assert float(arc.beta_values[-1]) <= 1e-6
    assert np.all(arc.beta_values[1:-1] >= 0.0)
    flat, sharp = manifolds01
    assert abs(arc.p_values[0] - float(flat.interp_p()(prof.u1))) <= 1e-8
    assert abs(arc.p_values[-1] - float(sharp.interp_p()(prof.u2))) <= 1e-8
    # stationarity of the control: Y + L_beta = 0 along the arc
    inner = slice(1, -1)
    lb = np.asarray(weed.L_beta(arc.u_nodes[inner], arc.beta_values[inner]))
    assert np.max(np.abs(arc.y_values[inner] + lb)) <= 1e-6


def test_transversality_boundary_conditions(weed, opt01):
    # Y(u_i) + L_beta(u_i, 0+) = 0 at both junctions, Y from stationarity
    arc = opt01.arc
    for k, u in ((0, opt01.u1), (-1, opt01.u2)):
        y = -float(weed.L_beta(u, float(arc.beta_values[k])))
        assert abs(y + float(weed.L_beta(u, 0.0))) <= 1e-5


def test_pmp_residual_and_argmin(weed, opt01):
    rep = pmp_residual(opt01, weed)
    assert rep.yu_max <= 1e-5
    assert rep.min22_failures == 0


def test_argmin_check_detects_perturbation(weed, opt01):
    import copy
    prof = copy.deepcopy(opt01)
    k = len(prof.arc.u_nodes) // 2
    prof.arc.beta_values[k] += 1e-3
    rep = pmp_residual(prof, weed)
    assert rep.min22_failures > 0


def test_optimal_cost_below_constructed(weed, c_star_weed, opt01):
    con = finite_cost_control(weed, -0.1, c_star=c_star_weed)
    assert opt01.cost <= con.cost


def test_gate_rejects_monostable():
    with pytest.raises(InvalidParameterError):
        optimal_profile(make_logistic_model(1.0), -0.1)


def test_no_solution_reports_scan_table(weed, c_star_weed):
    # far above the reachable speed range the shooting map has no root
    with pytest.raises(NoSolutionError) as info:
        optimal_profile(weed, 0.75, c_star=c_star_weed)
    exc = info.value
    assert exc.phi_table is None or len(exc.phi_table) >= 0


def test_effort_row_independence(weed, c_star_weed, opt01):
    rows = effort_curve(weed, [-0.1], c_star=c_star_weed)
    assert rows[0].ok
    assert rows[0].effort == pytest.approx(opt01.cost, rel=1e-9)


def test_effort_requires_admissible_speeds(weed, c_star_weed):
    with pytest.raises(InvalidParameterError):
        effort_curve(weed, [c_star_weed - 0.1], c_star=c_star_weed)


def test_effort_thread_pool_path(weed, c_star_weed, opt01, monkeypatch):
    monkeypatch.setenv("TRAVWAVE_THREADS", "2")
    rows = effort_curve(weed, [c_star_weed, -0.1], c_star=c_star_weed)
    assert rows[0].effort == 0.0
    assert rows[1].effort == pytest.approx(opt01.cost, rel=1e-9)
