import json

import numpy as np
import pytest

from nvwave import wave_speed as ws
from nvwave.eulerian import EulerianState, energy, from_functions, smooth_state, validate
from nvwave.measures import RadonMeasure


def test_zero_with_atoms_valid():
    g = np.linspace(0, 1, 5)
    mu = RadonMeasure.with_atoms(g, np.zeros(4), [(0.5, 1.0)])
    nu = RadonMeasure.with_atoms(g, np.zeros(4), [(0.25, 2.0)])
    st = EulerianState(g, np.zeros(5), np.zeros(4), np.zeros(4), mu, nu)
    assert validate(st).ok
    assert energy(st) == pytest.approx(3.0)


def test_density_matches_R():
    g = np.linspace(0, 1, 5)
    R = np.full(4, 2.0)
    st = EulerianState(g, np.zeros(5), R, np.zeros(4), RadonMeasure.from_density(g, np.ones(4)),
                       RadonMeasure.zero(g))
    assert validate(st).ok
    bad = EulerianState(g, np.zeros(5), R, np.zeros(4), RadonMeasure.from_density(g, np.full(4, 0.5)),
                        RadonMeasure.zero(g))
    rep = validate(bad)
    assert not rep.ok and rep.mu_deviation == pytest.approx(0.5)


def test_zero_energy():
    g = np.linspace(-1, 1, 9)
    assert from_functions(g, np.zeros(9), np.zeros(8), np.zeros(8)).energy() == 0.0


def test_undefined_cells_skipped():
    g = np.linspace(0, 1, 3)
    st = from_functions(g, np.zeros(3), [1.0, 1.0], [0.0, 0.0])
    st2 = EulerianState(g, st.u, np.array([np.nan, 1.0]), st.S, st.mu, st.nu)
    rep = validate(st2)
    assert rep.ok and rep.undefined_cells == 1


def test_shape_errors():
    g = np.linspace(0, 1, 3)
    z = RadonMeasure.zero(g)
    with pytest.raises(ValueError):
        EulerianState(g, np.zeros(2), np.zeros(2), np.zeros(2), z, z)
    with pytest.raises(ValueError):
        EulerianState(g, np.zeros(3), np.zeros(3), np.zeros(2), z, z)


def test_smooth_state_linear():
    m = ws.constant(1.0)
    g = np.linspace(-1, 1, 201)
    st = smooth_state(g, lambda x: x ** 2, lambda x: 0 * x, m)
    assert np.allclose(st.R, 2 * st.cells, atol=1e-12)
    assert np.allclose(st.S, -st.R)
    assert validate(st).ok
    # energy = int (u_x)^2 / 2 dx = int 2 x^2 dx = 4/3
    assert st.energy() == pytest.approx(4 / 3, rel=1e-4)


def test_roundtrip_json_csv():
    g = np.linspace(0, 1, 4)
    st = from_functions(g, [0, 1, 2, 3.0], [1.0, np.nan, 2.0], [0, 0, 1.0], mu_atoms=[(0.5, 0.2)])
    d = json.loads(st.to_json())
    st2 = EulerianState.from_dict(d)
    assert np.isnan(st2.R[1]) and st2.mu.atoms == st.mu.atoms
    text = st.to_csv()
    assert text.splitlines()[0] == "x,u,R,S,mu_density,nu_density"
    assert "mu,0.5,0.2" in text
