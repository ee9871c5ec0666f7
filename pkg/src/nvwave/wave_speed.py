"""Wave speed models c(u) with analytic derivatives and global bounds."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

Func = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class WaveSpeedModel:
    """Coefficient c(u) together with c', c'' and the bounds kappa, lambda, lambda_bar.

    The bounds are supplied by the caller and checked by sampling with
    :func:`verify_bounds`; they are never inferred.
    """

    c: Func
    c_prime: Func
    c_second: Func
    kappa: float
    lam: float
    lam_bar: float
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.kappa > 1:
            raise ValueError("kappa must be > 1")
        if self.lam < 0 or self.lam_bar < 0:
            raise ValueError("lambda and lambda_bar must be >= 0")

    def eval(self, u):
        """Return (c, c', c'') at u (scalar or array)."""
        return evaluate(self, u)

    def to_dict(self):
        return {"name": self.name, "params": dict(self.params), "kappa": self.kappa,
                "lambda": self.lam, "lambda_bar": self.lam_bar}


def evaluate(model: WaveSpeedModel, u):
    scalar = np.ndim(u) == 0
    ua = np.asarray(u, dtype=float)
    out = (np.asarray(model.c(ua), dtype=float) * np.ones_like(ua),
           np.asarray(model.c_prime(ua), dtype=float) * np.ones_like(ua),
           np.asarray(model.c_second(ua), dtype=float) * np.ones_like(ua))
    if scalar:
        return tuple(float(v) for v in out)
    return out


@dataclass(frozen=True)
class BoundsReport:
    c_upper: float      # max c - kappa
    c_lower: float      # max 1/kappa - c
    c_prime: float      # max |c'| - lambda
    c_second: float     # max |c''| - lambda_bar

    @property
    def ok(self) -> bool:
        return max(self.c_upper, self.c_lower, self.c_prime, self.c_second) <= 0.0

    def to_dict(self):
        return {"c_upper": self.c_upper, "c_lower": self.c_lower,
                "c_prime": self.c_prime, "c_second": self.c_second, "ok": self.ok}


def verify_bounds(model: WaveSpeedModel, interval=(-10.0, 10.0), n: int = 1001) -> BoundsReport:
    """Sample the model on ``interval`` and report the worst bound residuals."""
    lo, hi = float(interval[0]), float(interval[1])
    if not hi > lo:
        raise ValueError("empty interval")
    if n < 2:
        raise ValueError("n must be >= 2")
    u = np.linspace(lo, hi, n)
    c, cp, cpp = evaluate(model, u)
    return BoundsReport(
        c_upper=float(np.max(c) - model.kappa),
        c_lower=float(np.max(1.0 / model.kappa - c)),
        c_prime=float(np.max(np.abs(cp)) - model.lam),
        c_second=float(np.max(np.abs(cpp)) - model.lam_bar),
    )


# built-in models -------------------------------------------------------------

def constant(c0: float = 1.0, kappa: float | None = None) -> WaveSpeedModel:
    if c0 <= 0:
        raise ValueError("c0 must be positive")
    k = kappa if kappa is not None else max(2.0, 2.0 * c0, 2.0 / c0)
    return WaveSpeedModel(
        c=lambda u: np.full_like(np.asarray(u, dtype=float), c0),
        c_prime=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
        c_second=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
        kappa=k, lam=0.0, lam_bar=0.0, name="constant", params={"c0": c0},
    )


def hut(s: float = 2.0, kappa: float | None = None, lam: float | None = None,
        lam_bar: float | None = None) -> WaveSpeedModel:
    """c(u) = sqrt(s^2 + sin u), s > 1."""
    if not s > 1:
        raise ValueError("hut model needs s > 1")
    cmin = np.sqrt(s * s - 1.0)
    k = kappa if kappa is not None else max(np.sqrt(s * s + 1.0), 1.0 / cmin) * (1 + 1e-12)
    lm = lam if lam is not None else 1.0 / (2.0 * cmin)
    lb = lam_bar if lam_bar is not None else 1.0 / (2.0 * cmin) + 1.0 / (4.0 * cmin ** 3)

    def c(u):
        return np.sqrt(s * s + np.sin(u))

    def cp(u):
        return np.cos(u) / (2.0 * c(u))

    def cpp(u):
        cu = c(u)
        return -np.sin(u) / (2.0 * cu) - np.cos(u) ** 2 / (4.0 * cu ** 3)

    return WaveSpeedModel(c=c, c_prime=cp, c_second=cpp, kappa=float(k), lam=float(lm),
                          lam_bar=float(lb), name="hut", params={"s": s})


def bump(c0: float = 1.0, eps: float = 0.5, k: float = 1.0, center: float = 0.0,
         kappa: float | None = None) -> WaveSpeedModel:
    """c(u) = c0 + eps * (1 - cos(k (u - center))).

    A smooth well with minimum c0 at u = center, where c' vanishes and c is
    decreasing to the left and increasing to the right.
    """
    if c0 <= 0 or eps < 0:
        raise ValueError("bump model needs c0 > 0 and eps >= 0")
    cmax = c0 + 2.0 * eps
    kp = kappa if kappa is not None else max(cmax, 1.0 / c0, 1.0 + 1e-9) * (1 + 1e-12)

    def c(u):
        return c0 + eps * (1.0 - np.cos(k * (np.asarray(u, dtype=float) - center)))

    def cp(u):
        return eps * k * np.sin(k * (np.asarray(u, dtype=float) - center))

    def cpp(u):
        return eps * k * k * np.cos(k * (np.asarray(u, dtype=float) - center))

    return WaveSpeedModel(c=c, c_prime=cp, c_second=cpp, kappa=float(kp), lam=float(eps * k),
                          lam_bar=float(eps * k * k), name="bump",
                          params={"c0": c0, "eps": eps, "k": k, "center": center})


MODELS = {"constant": constant, "hut": hut, "bump": bump}


def make_model(name: str, **params) -> WaveSpeedModel:
    try:
        factory = MODELS[name]
    except KeyError:
        raise ValueError(f"unknown wave speed model {name!r}") from None
    return factory(**params)
