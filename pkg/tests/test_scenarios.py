import math

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import solve_state
from nvwave.eulerian import validate
from nvwave.scenarios import (SCENARIOS, DiracBoxParams, HutParams, LinearParams, SpikeParams,
                              build, check_linear, check_linear_box, dalembert, dirac_box_initial,
                              hut_initial, hut_max_R, hut_profile, hut_R_S, hut_slope,
                              hut_weak_residual, linear_initial, spike_initial)


def test_build_every_scenario():
    for name in SCENARIOS:
        params = {"dx": 1 / 32} if name != "spike" else {}
        st, m, p = build(name, params)
        assert validate(st).ok
    with pytest.raises(ValueError):
        build("tsunami")
    with pytest.raises(TypeError):
        build("linear", {"nope": 1})


def test_linear_against_dalembert():
    p = LinearParams(half_domain=3.0, dx=1 / 64)
    st, m = linear_initial(p)
    fld = solve_state(st, m, 1 / 64, t_max=1.0, t_min=-1.0)
    rep = check_linear(fld, p, (0.0, 0.5, 1.0, -1.0))
    assert rep.ok, rep.to_dict()
    assert dalembert(p, 0.0, 0.0) == pytest.approx(1.0)


# hut ------------------------------------------------------------------------

def test_hut_half_width():
    for kb in (1.0, 2.5):
        p = HutParams(k_bar=kb)
        full = quad(lambda v: math.sqrt(math.sin(v)), 0, math.pi)[0]
        assert 2 * p.alpha == pytest.approx(full / kb, rel=1e-12)


def test_hut_profile_shape():
    p = HutParams()
    a2 = 2 * p.alpha
    z = np.linspace(-a2, a2, 401)
    w = hut_profile(p, z)
    assert np.allclose(w, w[::-1], atol=1e-12)
    assert hut_profile(p, 0.0) == pytest.approx(math.pi)
    assert hut_profile(p, a2) == pytest.approx(0.0, abs=1e-12)
    assert np.all(hut_profile(p, np.array([-a2 - 1, a2 + 0.3])) == 0)
    # w' = k_bar / sqrt(sin w) on the rising branch
    zz = np.array([-1.5 * p.alpha, -p.alpha, -0.5 * p.alpha])
    d = (hut_profile(p, zz + 1e-6) - hut_profile(p, zz - 1e-6)) / 2e-6
    assert np.allclose(d, hut_slope(p, zz), rtol=1e-6)


def test_hut_R_S_signs_and_max():
    p = HutParams()
    z = np.linspace(-2 * p.alpha, 2 * p.alpha, 2001)[1:-1]
    z = z[z != 0]
    R, S = hut_R_S(p, z)
    left, right = z < 0, z > 0
    assert np.all(R[left] > 0) and np.all(S[left] < 0)
    assert np.all(R[right] < 0) and np.all(S[right] > 0)
    assert np.max(np.abs(R)) == pytest.approx(hut_max_R(p), rel=1e-4)
    # traveling wave: u_t = -s u_x means R + S = -s (R - S) / c
    w = hut_profile(p, z)
    c = np.sqrt(p.s ** 2 + np.sin(w))
    assert np.allclose(R + S, -p.s * (R - S) / c, rtol=1e-9, atol=1e-12)


def test_hut_initial_energy_exact():
    p = HutParams(dx=1 / 32)
    st, m = hut_initial(p)
    assert validate(st).ok

    def dens(z):
        R, S = hut_R_S(p, np.array([z]))
        return 0.25 * (R[0] ** 2 + S[0] ** 2)

    a2 = 2 * p.alpha
    E = 2 * quad(dens, -a2, 0, limit=400)[0]
    assert st.energy() == pytest.approx(E, rel=1e-6)


def test_hut_weak_residual_order():
    p = HutParams()
    r = [hut_weak_residual(p, h) for h in (1 / 32, 1 / 64, 1 / 128)]
    orders = np.log2(np.array(r[:-1]) / np.array(r[1:]))
    assert np.all(orders > 1.8), r


def test_hut_params_validation():
    with pytest.raises(ValueError):
        HutParams(s=1.0)
    with pytest.raises(ValueError):
        HutParams(k_bar=0.0)


# Dirac box ------------------------------------------------------------------

def test_box_energies():
    p = DiracBoxParams(dx=1 / 32)
    st, _ = dirac_box_initial(p, "plain")
    assert st.energy() == pytest.approx(p.a + p.b)
    st, _ = dirac_box_initial(p, "flanked")
    assert st.energy() == pytest.approx(2 * (p.beta - p.alpha) + p.a + p.b)
    with pytest.raises(ValueError):
        dirac_box_initial(p, "striped")
    with pytest.raises(ValueError):
        DiracBoxParams(alpha=1.0, beta=0.5)


def test_flanked_band_profile():
    p = DiracBoxParams(dx=1 / 32)
    st, m = dirac_box_initial(p, "flanked")
    # S = -2 on the right band means c(u) u_x = 1
    k = np.nonzero(st.cells > p.alpha)[0]
    c = m.eval(0.5 * (st.u[k] + st.u[k + 1]))[0]
    assert np.allclose(c * np.diff(st.u)[k] / st.dx[k], 1.0, rtol=1e-3)


def test_empty_box_stays_constant():
    p = DiracBoxParams(a=0.0, b=0.0, dx=1 / 32)
    st, m = dirac_box_initial(p, "plain")
    fld = solve_state(st, m, 1 / 32, t_max=0.3, t_min=-0.3, margin=0.5)
    _, _, Z = fld.nodes()
    assert np.all(Z[:, 2] == p.gamma_state)


def test_plain_box_transport():
    p = DiracBoxParams(dx=1 / 32)
    st, m = dirac_box_initial(p, "plain")
    fld = solve_state(st, m, 1 / 32, t_max=0.3, t_min=-0.3, margin=0.5)
    rep = check_linear_box(fld, p, "plain")
    assert rep.ok, rep.to_dict()


# spike ----------------------------------------------------------------------

def test_spike_energy_and_sign():
    p = SpikeParams()
    st, m = spike_initial(p)
    assert st.energy() == pytest.approx(0.25 * p.peak ** 2 * p.width * math.sqrt(math.pi / 2),
                                        rel=1e-9)
    assert np.max(st.R) > 0 and np.all(st.S == 0)
    st2, _ = spike_initial(SpikeParams(family="forward", sign=-1))
    assert np.min(st2.S) < 0 and np.all(st2.R == 0)
    with pytest.raises(ValueError):
        SpikeParams(sign=0)
