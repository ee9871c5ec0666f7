"""Finite positive measures on the line: piecewise-constant density plus atoms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PLATEAU_REL = 1e-9


@dataclass(frozen=True, eq=False)
class RadonMeasure:
    """Measure = sum of cell masses on ``grid`` plus point masses.

    ``masses[k]`` is the mass of the cell (grid[k], grid[k+1]) and is spread
    uniformly over it. Atoms are given as two sorted arrays.
    """

    grid: np.ndarray
    masses: np.ndarray
    atom_pos: np.ndarray
    atom_mass: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        m = np.asarray(self.masses, dtype=float)
        ap = np.asarray(self.atom_pos, dtype=float).reshape(-1)
        am = np.asarray(self.atom_mass, dtype=float).reshape(-1)
        if g.ndim != 1 or g.size < 2:
            raise ValueError("grid needs at least two nodes")
        if np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        if m.shape != (g.size - 1,):
            raise ValueError("one mass per grid cell expected")
        if np.any(m < 0) or np.any(am < 0):
            raise ValueError("masses must be nonnegative")
        if ap.shape != am.shape:
            raise ValueError("atom positions and masses differ in length")
        if np.any(np.diff(ap) <= 0):
            raise ValueError("atom positions must be strictly increasing")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "atom_pos", ap)
        object.__setattr__(self, "atom_mass", am)

    # constructors
    @classmethod
    def from_density(cls, grid, density, atoms=()):
        grid = np.asarray(grid, dtype=float)
        masses = np.asarray(density, dtype=float) * np.diff(grid)
        return cls.with_atoms(grid, masses, atoms)

    @classmethod
    def with_atoms(cls, grid, masses, atoms=()):
        atoms = sorted((float(p), float(m)) for p, m in atoms)
        merged: dict[float, float] = {}
        for p, m in atoms:
            merged[p] = merged.get(p, 0.0) + m
        pos = np.array(sorted(merged), dtype=float)
        mass = np.array([merged[p] for p in pos], dtype=float)
        return cls(np.asarray(grid, dtype=float), np.asarray(masses, dtype=float), pos, mass)

    @classmethod
    def zero(cls, grid):
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.zeros(grid.size - 1), np.zeros(0), np.zeros(0))

    @property
    def density(self) -> np.ndarray:
        return self.masses / np.diff(self.grid)

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return [(float(p), float(m)) for p, m in zip(self.atom_pos, self.atom_mass)]

    def total_mass(self) -> float:
        return total_mass(self)

    def cumulative_open(self, x):
        return cumulative_open(self, x)

    def add_atom(self, pos: float, mass: float) -> "RadonMeasure":
        return RadonMeasure.with_atoms(self.grid, self.masses, self.atoms + [(pos, mass)])

    def to_dict(self) -> dict:
        return {"grid": self.grid.tolist(), "masses": self.masses.tolist(),
                "atoms": [[p, m] for p, m in self.atoms]}

    @classmethod
    def from_dict(cls, d: dict) -> "RadonMeasure":
        return cls.with_atoms(d["grid"], d["masses"], [tuple(a) for a in d.get("atoms", [])])


def total_mass(m: RadonMeasure) -> float:
    return float(np.sum(m.masses) + np.sum(m.atom_mass))


def cumulative_open(m: RadonMeasure, x):
    """m((-inf, x)); an atom sitting exactly at x is not counted."""
    xa = np.asarray(x, dtype=float)
    g = m.grid
    cum = np.concatenate(([0.0], np.cumsum(m.masses)))
    k = np.clip(np.searchsorted(g, xa, side="right") - 1, 0, g.size - 2)
    frac = np.clip((xa - g[k]) / (g[k + 1] - g[k]), 0.0, 1.0)
    ac = cum[k] + frac * m.masses[k]
    ac = np.where(xa <= g[0], 0.0, np.where(xa >= g[-1], cum[-1], ac))
    if m.atom_pos.size:
        acum = np.concatenate(([0.0], np.cumsum(m.atom_mass)))
        ac = ac + acum[np.searchsorted(m.atom_pos, xa, side="left")]
    return float(ac) if np.ndim(x) == 0 else ac


def pushforward_segments(x_nodes, seg_mass, plateau_rel: float = PLATEAU_REL,
                         drop_below: float = 0.0) -> RadonMeasure:
    """Push the per-segment masses through the nondecreasing node map ``x_nodes``.

    Segment k joins x_nodes[k] and x_nodes[k+1]. Segments whose x-increment is
    below ``plateau_rel`` times the x-range are plateaus and their mass
    becomes an atom at the plateau position.
    """
    x = np.asarray(x_nodes, dtype=float)
    w = np.asarray(seg_mass, dtype=float)
    if w.shape != (x.size - 1,):
        raise ValueError("need one mass per segment")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    dx = np.diff(x)
    span = float(x[-1] - x[0]) if x.size > 1 else 0.0
    tol = plateau_rel * max(span, 1e-300)
    if np.any(dx < -tol):
        raise ValueError("x_of_s must be nondecreasing")
    plateau = dx < tol
    if np.all(plateau):
        raise ValueError("map is constant; no grid can be formed")
    cells = ~plateau
    # node index (in the collapsed grid) that each segment starts from
    start_node = np.concatenate(([0], np.cumsum(cells)[:-1]))
    nodes = np.concatenate(([x[0]], x[1:][cells]))
    # plateaus located before the first cell sit at x[0]; that is nodes[0]
    nodes = np.maximum.accumulate(nodes)
    atom_mass = np.bincount(start_node[plateau], weights=w[plateau], minlength=nodes.size)
    keep = atom_mass > drop_below
    keep &= atom_mass > 0
    pos = nodes[keep]
    am = atom_mass[keep]
    # collapsed grid may contain repeated nodes if tiny cells survive; fold them
    masses = w[cells]
    good = np.diff(nodes) > 0
    if not np.all(good):
        # merge zero-width cells into atoms at their position
        extra = [(float(nodes[i]), float(masses[i])) for i in np.nonzero(~good)[0] if masses[i] > 0]
        nodes_u = np.concatenate(([nodes[0]], nodes[1:][good]))
        masses = masses[good]
        atoms = [(float(p), float(m)) for p, m in zip(pos, am)] + extra
        return RadonMeasure.with_atoms(nodes_u, masses, atoms)
    return RadonMeasure(nodes, masses, pos, am)


def pushforward(x_of_s, weight_of_s, s=None, plateau_rel: float = PLATEAU_REL) -> RadonMeasure:
    """Push the measure weight(s) ds forward through x(s).

    Samples are node values; the weight is integrated with the trapezoid rule.
    """
    x = np.asarray(x_of_s, dtype=float)
    w = np.asarray(weight_of_s, dtype=float)
    if s is None:
        s = np.linspace(0.0, 1.0, x.size)
    s = np.asarray(s, dtype=float)
    if x.shape != w.shape or x.shape != s.shape:
        raise ValueError("x, weight and s must have equal length")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    seg = 0.5 * (w[1:] + w[:-1]) * np.diff(s)
    return pushforward_segments(x, seg, plateau_rel=plateau_rel)


def resample_masses(m: RadonMeasure, grid) -> np.ndarray:
    """Absolutely continuous mass of ``m`` in the cells of another grid."""
    grid = np.asarray(grid, dtype=float)
    g = m.grid
    cum = np.concatenate(([0.0], np.cumsum(m.masses)))
    k = np.clip(np.searchsorted(g, grid, side="right") - 1, 0, g.size - 2)
    frac = np.clip((grid - g[k]) / (g[k + 1] - g[k]), 0.0, 1.0)
    F = np.where(grid <= g[0], 0.0, np.where(grid >= g[-1], cum[-1], cum[k] + frac * m.masses[k]))
    return np.diff(F)
