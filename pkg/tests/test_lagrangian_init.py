from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nvwave import scenarios as sc
from nvwave import wave_speed as ws
from nvwave.eulerian import EulerianState, from_functions, smooth_state
from nvwave.lagrangian_init import build_curve, check_relations, curve_points, x1_of
from nvwave.measures import RadonMeasure


def test_x1_no_measure():
    X = np.linspace(-2, 2, 9)
    assert np.allclose(x1_of(RadonMeasure.zero([-5.0, 5.0]), X), X)


def test_x1_dirac():
    d = RadonMeasure.with_atoms([-5.0, 5.0], [0.0], [(0.0, 1.0)])
    assert x1_of(d, 0.5) == pytest.approx(0.0, abs=1e-10)
    assert x1_of(d, 1.5) == pytest.approx(0.5)
    assert x1_of(d, -1.0) == pytest.approx(-1.0)


def test_x1_unit_density():
    m = RadonMeasure.from_density([0.0, 1.0], [1.0])
    assert x1_of(m, 1.0) == pytest.approx(0.5)


def test_linear_curve_triplets():
    m = ws.constant(1.0)
    g = np.linspace(-1, 1, 11)
    st = from_functions(g, np.zeros(11), np.zeros(10), np.zeros(10))
    cv = build_curve(st, m, h=0.2)
    assert np.allclose(cv.Xbar, cv.s) and np.allclose(cv.Ybar, cv.s) and np.allclose(cv.xbar, cv.s)
    assert np.allclose(cv.Zxi_seg, [0.5, 0.5, 0, 0])
    assert np.allclose(cv.Zeta_seg, [-0.5, 0.5, 0, 0])


def test_dirac_curve_points():
    g = np.linspace(-2, 2, 5)
    st = EulerianState(g, np.zeros(5), np.zeros(4), np.zeros(4),
                       RadonMeasure.with_atoms(g, np.zeros(4), [(0.0, 1.0)]), RadonMeasure.zero(g))
    s = np.array([-0.5, 0.1, 0.25, 0.4, 1.0])
    X, Y, xb = curve_points(st, s)
    assert np.allclose(X, [-0.5, 0.2, 0.5, 0.8, 1.5], atol=1e-9)
    assert np.allclose(Y, 2 * s - X)
    assert np.allclose(xb[1:4], 0.0, atol=1e-9)


def test_box_plateaus():
    p = sc.DiracBoxParams(dx=1 / 32)
    st, m = sc.dirac_box_initial(p)
    cv = build_curve(st, m, h=1 / 32)
    nu_plat = (cv.deta > 0) & (cv.dxi == 0)
    mu_plat = (cv.dxi > 0) & (cv.deta == 0)
    assert nu_plat.sum() > 0 and mu_plat.sum() > 0
    assert np.allclose(cv.Zeta_seg[nu_plat], [0, 0, 0, 1])
    assert np.allclose(cv.Zxi_seg[mu_plat], [0, 0, 0, 1])
    # nu plateau comes first at the shared atom
    assert np.nonzero(nu_plat)[0].max() < np.nonzero(mu_plat)[0].min()


def test_relations_exact_and_perturbed():
    m = ws.bump()
    g = np.linspace(-1, 1, 41)
    st = smooth_state(g, lambda x: np.sin(3 * x), lambda x: np.cos(x), m)
    cv = build_curve(st, m, h=1 / 16)
    assert check_relations(cv, m).ok
    zx = cv.Zxi_seg.copy()
    zx[7, 3] += 0.1
    rep = check_relations(replace(cv, Zxi_seg=zx), m)
    assert not rep.ok and rep.g_xi == pytest.approx(0.1)


def test_linear_relations_zero():
    m = ws.constant(1.0)
    g = np.linspace(-1, 1, 41)
    st = smooth_state(g, lambda x: np.exp(-x * x), lambda x: 0 * x, m)
    assert check_relations(build_curve(st, m, h=1 / 32), m).worst < 1e-14


def test_s_grid_path_agrees():
    m = ws.constant(1.0)
    g = np.linspace(-1, 1, 41)
    st = smooth_state(g, lambda x: np.exp(-x * x), lambda x: 0 * x, m)
    cv = build_curve(st, m, h=1 / 32)
    cv2 = build_curve(st, m, s_grid=cv.s)
    assert np.allclose(cv2.Xbar, cv.Xbar, atol=1e-9) and np.allclose(cv2.xbar, cv.xbar, atol=1e-9)


def test_bad_inputs():
    g = np.linspace(0, 1, 3)
    st = from_functions(g, np.zeros(3), np.zeros(2), np.zeros(2), mu_atoms=[(0.3, 1.0)])
    with pytest.raises(ValueError):
        build_curve(st, ws.constant(), h=0.1)      # atom off the grid
    with pytest.raises(ValueError):
        build_curve(from_functions(g, np.zeros(3), np.zeros(2), np.zeros(2)), ws.constant(), h=-1)
    with pytest.raises(ValueError):
        build_curve(from_functions(g, np.zeros(3), np.zeros(2), np.zeros(2)), ws.constant())


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=12), st.lists(st.floats(-3, 3), min_size=4, max_size=12),
       st.lists(st.tuples(st.integers(0, 12), st.floats(0, 2), st.booleans()), max_size=3))
def test_curve_invariants(Rv, Sv, atoms):
    n = min(len(Rv), len(Sv))
    g = np.linspace(0, 1, n + 1)
    R, S = np.array(Rv[:n]), np.array(Sv[:n])
    u = np.concatenate(([0.0], np.cumsum((R - S) / 2 * np.diff(g))))
    mu_a = [(g[min(i, n)], a) for i, a, is_mu in atoms if is_mu and a > 0]
    nu_a = [(g[min(i, n)], a) for i, a, is_mu in atoms if not is_mu and a > 0]
    st_ = from_functions(g, u, R, S, mu_a, nu_a)
    m = ws.constant(1.0)
    cv = build_curve(st_, m, h=0.05)
    assert np.all(np.diff(cv.Xbar) >= 0) and np.all(np.diff(cv.Ybar) >= 0)
    assert np.max(np.abs(cv.Xbar + cv.Ybar - 2 * cv.s)) < 1e-12
    ds = np.diff(cv.s)
    assert np.all(np.diff(cv.Xbar) <= 2 * ds + 1e-12)
    assert check_relations(cv, m).ok
    assert cv.energy == pytest.approx(st_.energy())
