import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nvwave import wave_speed as ws


def test_constant_eval():
    assert ws.constant(1.0).eval(0.7) == (1.0, 0.0, 0.0)


def test_hut_values():
    m = ws.hut(2.0)
    c, cp, _ = m.eval(0.0)
    assert c == pytest.approx(2.0)
    assert cp == pytest.approx(0.25)
    c, cp, _ = m.eval(math.pi)
    assert c == pytest.approx(2.0)
    assert cp == pytest.approx(-0.25)


def test_vector_eval_shapes():
    c, cp, cpp = ws.bump().eval(np.linspace(0, 1, 7))
    assert c.shape == cp.shape == cpp.shape == (7,)


def test_bounds_pass_and_fail():
    assert ws.verify_bounds(ws.constant(1.0, kappa=2.0), (-5, 5), 100).ok
    m = ws.hut(2.0, kappa=1.5)
    rep = ws.verify_bounds(m, (-10, 10), 2001)
    assert not rep.ok and rep.c_upper == pytest.approx(math.sqrt(5) - 1.5, abs=1e-4)
    assert ws.verify_bounds(ws.hut(2.0, kappa=3.0, lam=0.3, lam_bar=0.5)).ok


@pytest.mark.parametrize("model", [ws.hut(1.5), ws.hut(3.0), ws.bump(1.0, 0.5, 2.0, 0.3), ws.constant(1.3)])
def test_default_bounds_hold(model):
    assert ws.verify_bounds(model, (-20, 20), 20001).ok


@pytest.mark.parametrize("model", [ws.hut(2.0), ws.bump(1.0, 0.4, 1.5, 0.2)])
def test_derivatives_consistent(model):
    u = np.linspace(-3, 3, 41)
    errs = []
    for d in (1e-2, 5e-3):
        fd1 = (model.eval(u + d)[0] - model.eval(u - d)[0]) / (2 * d)
        fd2 = (model.eval(u + d)[1] - model.eval(u - d)[1]) / (2 * d)
        errs.append(max(np.max(np.abs(fd1 - model.eval(u)[1])), np.max(np.abs(fd2 - model.eval(u)[2]))))
    assert math.log2(errs[0] / errs[1]) > 1.9


def test_invalid_models():
    with pytest.raises(ValueError):
        ws.hut(1.0)
    with pytest.raises(ValueError):
        ws.constant(-1.0)
    with pytest.raises(ValueError):
        ws.constant(1.0, kappa=1.0)
    with pytest.raises(ValueError):
        ws.make_model("nope")
    with pytest.raises(ValueError):
        ws.verify_bounds(ws.constant(), (1, 1))


def test_make_model_roundtrip():
    m = ws.make_model("bump", eps=0.2)
    assert m.to_dict()["params"]["eps"] == 0.2


@settings(max_examples=50, deadline=None)
@given(st.floats(1.05, 5.0), st.floats(-50, 50))
def test_hut_bounds_property(s, u):
    m = ws.hut(s)
    c, cp, cpp = m.eval(u)
    assert 1 / m.kappa <= c <= m.kappa
    assert abs(cp) <= m.lam + 1e-12 and abs(cpp) <= m.lam_bar + 1e-12
