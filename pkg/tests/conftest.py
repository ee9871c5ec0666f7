import numpy as np
import pytest

from nvwave import wave_speed as ws
from nvwave.eulerian import smooth_state
from nvwave.goursat import SolverConfig, solve
from nvwave.lagrangian_init import build_curve


def solve_state(st, model, h, t_max=0.5, t_min=0.0, margin=0.0):
    curve = build_curve(st, model, h=h, margin=margin)
    return solve(curve, model, SolverConfig(h=h, t_max=t_max, t_min=t_min))


@pytest.fixture(scope="session")
def bump_model():
    return ws.bump(1.0, 0.5, 1.0, 0.0)


@pytest.fixture(scope="session")
def linear_field():
    m = ws.constant(1.0)
    g = np.linspace(-3, 3, 6 * 32 + 1)
    st = smooth_state(g, lambda x: np.exp(-4 * x ** 2), lambda x: 0 * x, m)
    return st, m, solve_state(st, m, 1 / 32, t_max=0.5, t_min=-0.5)


@pytest.fixture(scope="session")
def bump_field(bump_model):
    g = np.linspace(-2, 2, 4 * 32 + 1)
    st = smooth_state(g, lambda x: np.exp(-4 * x ** 2), lambda x: 0 * x, bump_model)
    return st, bump_model, solve_state(st, bump_model, 1 / 32, t_max=0.3, t_min=-0.3)
