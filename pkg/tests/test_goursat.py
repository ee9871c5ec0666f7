import copy
import math

import numpy as np
import pytest

from nvwave import scenarios as sc
from nvwave import wave_speed as ws
from nvwave.eulerian import smooth_state
from nvwave.goursat import SolverConfig, lagr_rhs, residual_report, solve
from nvwave.lagrangian_init import build_curve

from conftest import solve_state


def test_linear_zero_energy_closed_form():
    m = ws.constant(1.0)
    g = np.linspace(-1, 1, 33)
    st = smooth_state(g, lambda x: 0 * x, lambda x: 0 * x, m)
    f = solve_state(st, m, 1 / 16, t_max=0.4, t_min=-0.4)
    xi, eta, Z = f.nodes()
    assert np.allclose(Z[:, 0], 0.5 * (xi - eta), atol=1e-13)
    assert np.allclose(Z[:, 1], 0.5 * (xi + eta), atol=1e-13)


def test_linear_characteristic_split(linear_field):
    # c = 1: x + t depends on xi only, x - t on eta only, u splits additively
    st, m, f = linear_field
    cv = f.curve
    xi, eta, Z = f.nodes()
    assert np.max(np.abs(Z[:, 1] + Z[:, 0] - np.interp(xi, cv.Xbar, cv.xbar))) < 1e-12
    assert np.max(np.abs(Z[:, 1] - Z[:, 0] - np.interp(eta, cv.Ybar, cv.xbar))) < 1e-12
    u_at = lambda x: np.interp(x, st.grid, st.u)
    U = 0.5 * (u_at(Z[:, 1] + Z[:, 0]) + u_at(Z[:, 1] - Z[:, 0]))
    assert np.max(np.abs(Z[:, 2] - U)) < 1e-12


def test_linear_residuals_machine_zero(linear_field):
    _, m, f = linear_field
    r = residual_report(f, m)
    assert r.relation_max < 1e-13 and r.sign_violation == 0.0


def test_rhs_vanishes_for_constant_speed():
    U = np.array([0.3])
    A = np.array([[0.5, 0.5, 0.1, 0.2]])
    assert np.all(lagr_rhs(ws.constant(1.0), U, A, A) == 0)


def test_box_constancy():
    p = sc.DiracBoxParams(dx=1 / 32)
    st, m = sc.dirac_box_initial(p)
    cv = build_curve(st, m, h=1 / 32)
    f = solve(cv, m, SolverConfig(h=1 / 32, t_max=0.2, t_min=-0.2))
    for side, seg_b, seg_r in ((f.below, cv.Zxi_seg, cv.Zeta_seg), (f.above, cv.Zeta_seg, cv.Zxi_seg)):
        for d in range(1, side.n_fronts + 1):
            j = np.arange(side.bottom[d].shape[0])
            ok = ~np.isnan(side.bottom[d]).any(axis=1)
            assert np.array_equal(side.bottom[d][ok], seg_b[(j + d - 1)[ok]])
            okr = ~np.isnan(side.right[d]).any(axis=1)
            assert np.array_equal(side.right[d][okr], seg_r[j[okr]])
        for Zd in side.Z:
            assert np.all(Zd[~np.isnan(Zd[:, 2]), 2] == p.gamma_state)


def _bump_field(h):
    m = ws.bump(1.0, 0.5, 1.0, 0.0)
    g = np.linspace(-2, 2, int(round(4 / h)) + 1)
    st = smooth_state(g, lambda x: np.exp(-4 * x ** 2), lambda x: 0 * x, m)
    return solve_state(st, m, h, t_max=0.3, t_min=-0.3), m


def test_residual_order_two():
    r = [residual_report(*_bump_field(h)).relation_max for h in (1 / 16, 1 / 32, 1 / 64)]
    assert math.log2(r[1] / r[2]) >= 1.8 and math.log2(r[0] / r[1]) >= 1.8


def test_sign_and_bound_invariants(bump_field):
    _, m, f = bump_field
    r = residual_report(f, m)
    assert r.sign_violation == 0.0
    assert 0 < r.g_min <= r.g_max < 2


def test_corruption_is_localized(bump_field):
    _, m, f = bump_field
    g = copy.deepcopy(f)
    g.below.bottom[5][10, 3] += 0.3
    r = residual_report(g, m)
    assert r.relation_max > 0.1
    name, k = r.worst_location
    e = g.edges()[0 if name == "xi" else 1]
    ok = (e["length"] > 0) & ~np.isnan(e["value"]).any(axis=1)
    assert e["value"][ok][k][3] == g.below.bottom[5][10, 3]


def test_field_exports(linear_field):
    _, _, f = linear_field
    text = f.to_csv().splitlines()
    assert text[0].startswith("xi,eta,t,x,U,J")
    s = f.summary()
    assert s["fronts_below"] > 0 and s["t_range"][0] <= -0.5 and s["t_range"][1] >= 0.5
    lo, hi = f.slice_range()
    assert lo <= -0.5 and hi >= 0.5


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(h=0)
    with pytest.raises(ValueError):
        SolverConfig(fp_tol=0)
    with pytest.raises(ValueError):
        SolverConfig(fp_max_iter=0)


def test_band_limits_region(bump_model):
    g = np.linspace(-2, 2, 65)
    st = smooth_state(g, lambda x: np.exp(-4 * x ** 2), lambda x: 0 * x, bump_model)
    cv = build_curve(st, bump_model, h=1 / 16)
    full = solve(cv, bump_model, SolverConfig(h=1 / 16, t_max=0.3))
    band = solve(cv, bump_model, SolverConfig(h=1 / 16, t_max=0.3, band=0.2))
    assert band.nodes()[2].shape[0] < full.nodes()[2].shape[0]
