"""Admissible Eulerian data (u, R, S, mu, nu) on a spatial grid."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .measures import RadonMeasure, total_mass
from .wave_speed import WaveSpeedModel


@dataclass(frozen=True, eq=False)
class EulerianState:
    """u lives on grid nodes; R and S are cell values (one per cell).

    NaN entries in R or S mark cells where the value is undefined, for
    instance over a breaking point.
    """

    grid: np.ndarray
    u: np.ndarray
    R: np.ndarray
    S: np.ndarray
    mu: RadonMeasure
    nu: RadonMeasure
    time: float = 0.0

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        object.__setattr__(self, "grid", g)
        for name in ("u", "R", "S"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.u.shape != g.shape:
            raise ValueError("u must be sampled on grid nodes")
        if self.R.shape != (g.size - 1,) or self.S.shape != (g.size - 1,):
            raise ValueError("R and S need one value per cell")

    @property
    def cells(self) -> np.ndarray:
        return 0.5 * (self.grid[1:] + self.grid[:-1])

    @property
    def dx(self) -> np.ndarray:
        return np.diff(self.grid)

    def energy(self) -> float:
        return energy(self)

    def validate(self, tol: float = 1e-8):
        return validate(self, tol)

    def to_dict(self) -> dict:
        return {
            "time": self.time,
            "grid": self.grid.tolist(),
            "u": self.u.tolist(),
            "R": _nan_list(self.R),
            "S": _nan_list(self.S),
            "mu": self.mu.to_dict(),
            "nu": self.nu.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EulerianState":
        return cls(np.array(d["grid"]), np.array(d["u"]), _from_nan_list(d["R"]),
                   _from_nan_list(d["S"]), RadonMeasure.from_dict(d["mu"]),
                   RadonMeasure.from_dict(d["nu"]), float(d.get("time", 0.0)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_csv(self) -> str:
        """Cell table x, u, R, S, mu_density, nu_density followed by the atoms."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "u", "R", "S", "mu_density", "nu_density"])
        ug = 0.5 * (self.u[1:] + self.u[:-1])
        mud = _density_on(self.mu, self.grid)
        nud = _density_on(self.nu, self.grid)
        for row in zip(self.cells, ug, self.R, self.S, mud, nud):
            w.writerow([_fmt(v) for v in row])
        w.writerow([])
        w.writerow(["measure", "position", "mass"])
        for name, m in (("mu", self.mu), ("nu", self.nu)):
            for p, a in m.atoms:
                w.writerow([name, _fmt(p), _fmt(a)])
        return buf.getvalue()


def _fmt(v) -> str:
    v = float(v)
    return "nan" if np.isnan(v) else repr(v)


def _nan_list(a):
    return [None if np.isnan(v) else float(v) for v in a]


def _from_nan_list(a):
    return np.array([np.nan if v is None else v for v in a], dtype=float)


def _density_on(m: RadonMeasure, grid) -> np.ndarray:
    if m.grid.shape == np.shape(grid) and np.allclose(m.grid, grid):
        return m.density
    from .measures import resample_masses
    return resample_masses(m, grid) / np.diff(grid)


@dataclass(frozen=True)
class ValidationReport:
    mu_deviation: float
    nu_deviation: float
    tol: float
    undefined_cells: int

    @property
    def ok(self) -> bool:
        return self.mu_deviation <= self.tol and self.nu_deviation <= self.tol

    def to_dict(self):
        return {"mu_deviation": self.mu_deviation, "nu_deviation": self.nu_deviation,
                "tol": self.tol, "undefined_cells": self.undefined_cells, "ok": self.ok}


def validate(state: EulerianState, tol: float = 1e-8, relative: bool = False) -> ValidationReport:
    """Cell-wise check that the a.c. densities equal R^2/4 and S^2/4.

    Cells with undefined R or S are skipped and counted.
    """
    for m in (state.mu, state.nu):
        if m.grid.shape != state.grid.shape or not np.allclose(m.grid, state.grid, rtol=0, atol=1e-12):
            raise ValueError("measure grid does not match state grid")
    dev = []
    undefined = 0
    for Q, m in ((state.R, state.mu), (state.S, state.nu)):
        bad = np.isnan(Q)
        undefined += int(bad.sum())
        d = np.abs(m.density - 0.25 * Q * Q)
        if relative:
            d = d / np.maximum(1.0, m.density)
        d = d[~bad]
        dev.append(float(d.max()) if d.size else 0.0)
    return ValidationReport(dev[0], dev[1], tol, undefined)


def energy(state: EulerianState) -> float:
    return total_mass(state.mu) + total_mass(state.nu)


def from_functions(grid, u, R, S, mu_atoms=(), nu_atoms=(), time: float = 0.0) -> EulerianState:
    """Build a state whose measures have densities R^2/4 and S^2/4 exactly.

    ``u`` is sampled at nodes; R and S are given as cell values.
    """
    grid = np.asarray(grid, dtype=float)
    R = np.asarray(R, dtype=float)
    S = np.asarray(S, dtype=float)
    mu = RadonMeasure.from_density(grid, 0.25 * R * R, mu_atoms)
    nu = RadonMeasure.from_density(grid, 0.25 * S * S, nu_atoms)
    return EulerianState(grid, np.asarray(u, dtype=float), R, S, mu, nu, time)


def smooth_state(grid, u0, ut0, model: WaveSpeedModel, time: float = 0.0) -> EulerianState:
    """Data from smooth callables u0(x), ut0(x); R, S = u_t +- c u_x at cell centres."""
    grid = np.asarray(grid, dtype=float)
    u_nodes = np.asarray(u0(grid), dtype=float)
    xm = 0.5 * (grid[1:] + grid[:-1])
    um = 0.5 * (u_nodes[1:] + u_nodes[:-1])
    ux = np.diff(u_nodes) / np.diff(grid)
    cm = model.eval(um)[0]
    utm = np.asarray(ut0(xm), dtype=float)
    return from_functions(grid, u_nodes, utm + cm * ux, utm - cm * ux, time=time)
