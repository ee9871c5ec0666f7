import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from nvwave import wave_speed as ws
from nvwave.eulerian import smooth_state
from nvwave.estimators import BreakingPredictor, ConservativeSolver
from nvwave.scenarios import SpikeParams, spike_center_value, spike_initial


@pytest.fixture(scope="module")
def gauss():
    m = ws.bump(1.0, 0.5, 1.0, 0.0)
    g = np.linspace(-2, 2, 129)
    return smooth_state(g, lambda x: np.exp(-4 * x ** 2), lambda x: 0 * x, m), m


def test_params_and_clone(gauss):
    _, m = gauss
    est = ConservativeSolver(model=m, h=1 / 16, t_max=0.2)
    assert est.get_params()["h"] == 1 / 16
    c = clone(est).set_params(t_max=0.1)
    assert c.t_max == 0.1 and est.t_max == 0.2 and c.model.name == m.name


def test_fit_transform(gauss):
    st, m = gauss
    est = ConservativeSolver(model=m, h=1 / 32, t_max=0.2, t_min=-0.2).fit(st)
    sl = est.transform([0.0, 0.2, -0.1])
    assert [s.T for s in sl] == [0.0, 0.2, -0.1]
    assert np.max(est.energy_drift([0.1, -0.1])) < 1e-6
    assert est.breaking_sets_ == [] and est.events_ == []


def test_not_fitted_and_bad_input(gauss):
    st, m = gauss
    with pytest.raises(NotFittedError):
        ConservativeSolver(model=m).transform([0.0])
    with pytest.raises(NotFittedError):
        BreakingPredictor(model=m).predict()
    with pytest.raises(TypeError):
        ConservativeSolver(model=m).fit(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        ConservativeSolver().fit(st)


def test_predictor_on_spike():
    st, m = spike_initial(SpikeParams())
    _, xb = spike_center_value(st, "backward")
    pr = BreakingPredictor(model=m).fit(st).predict([xb])
    back = [p for p in pr if p.family == "backward"][0]
    assert back.applicable and back.orientation == "future"
    assert len(BreakingPredictor(model=m).fit(st).predict()) == 2 * st.cells.size
