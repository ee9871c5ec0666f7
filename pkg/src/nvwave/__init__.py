"""Conservative solutions of the nonlinear variational wave equation."""

from .breaking import detect_breaking, predict_backward, predict_forward, riccati_envelope
from .estimators import BreakingPredictor, ConservativeSolver
from .eulerian import EulerianState, from_functions, smooth_state
from .extract import extract
from .goursat import SolverConfig, solve
from .lagrangian_init import build_curve
from .wave_speed import WaveSpeedModel, make_model

__version__ = "0.1.0"

__all__ = [
    "BreakingPredictor", "ConservativeSolver", "EulerianState", "SolverConfig", "WaveSpeedModel",
    "build_curve", "detect_breaking", "extract", "from_functions", "make_model",
    "predict_backward", "predict_forward", "riccati_envelope", "smooth_state", "solve",
]
