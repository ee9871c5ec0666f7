"""scikit-learn style front ends.

``ConservativeSolver`` takes an initial EulerianState in ``fit`` and returns
time slices from ``transform``; ``BreakingPredictor`` evaluates the window
criteria on the state seen in ``fit``. Inputs are states, not feature
matrices, so these are not drop-in pipeline steps; they only borrow the
parameter handling (get_params / set_params / clone) and the fit idiom.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .breaking import breaking_sets, detect_breaking, predict_grid
from .eulerian import EulerianState
from .extract import extract
from .goursat import SolverConfig, solve
from .lagrangian_init import build_curve
from .wave_speed import WaveSpeedModel


def _check_state(X):
    if not isinstance(X, EulerianState):
        raise TypeError(f"expected an EulerianState, got {type(X).__name__}")
    return X


class ConservativeSolver(BaseEstimator):
    """Solve once in ``fit``; slice at any time in range with ``transform``."""

    def __init__(self, model: WaveSpeedModel | None = None, h: float = 1 / 64,
                 t_max: float = 1.0, t_min: float = 0.0, box: float = np.inf,
                 margin: float = 0.0, eps_break: float | None = None):
        self.model = model
        self.h = h
        self.t_max = t_max
        self.t_min = t_min
        self.box = box
        self.margin = margin
        self.eps_break = eps_break

    def fit(self, X, y=None):
        st = _check_state(X)
        if self.model is None:
            raise ValueError("model is required")
        self.curve_ = build_curve(st, self.model, h=self.h, margin=self.margin)
        cfg = SolverConfig(h=self.h, t_max=self.t_max, t_min=self.t_min, band=self.box)
        self.field_ = solve(self.curve_, self.model, cfg)
        self.events_ = detect_breaking(self.field_, self.eps_break)
        self.breaking_sets_ = breaking_sets(self.events_)
        self.energy_ = float(self.curve_.energy)
        return self

    def _fitted(self):
        if not hasattr(self, "field_"):
            raise NotFittedError("call fit first")

    def transform(self, X):
        """X: iterable of times. Returns a list of TimeSlice."""
        self._fitted()
        return [extract(self.field_, self.model, float(t), self.eps_break)
                for t in np.atleast_1d(np.asarray(X, dtype=float))]

    def energy_drift(self, times) -> np.ndarray:
        """|E(T) - E0| / E0 at each time."""
        self._fitted()
        E = np.array([s.energy() for s in self.transform(times)])
        return np.abs(E - self.energy_) / max(self.energy_, 1e-300)


class BreakingPredictor(BaseEstimator):
    def __init__(self, model: WaveSpeedModel | None = None):
        self.model = model

    def fit(self, X, y=None):
        self.state_ = _check_state(X)
        if self.model is None:
            raise ValueError("model is required")
        return self

    def predict(self, X=None):
        """Predictions at sample points X (default: every cell midpoint), both families."""
        if not hasattr(self, "state_"):
            raise NotFittedError("call fit first")
        pts = None if X is None else np.atleast_1d(np.asarray(X, dtype=float))
        return predict_grid(self.state_, self.model, pts)
