"""Initial curve and Lagrangian data on it.

Data on the curve is stored per segment: between samples k and k+1 the
derivatives Z_xi, Z_eta are constant for piecewise-constant Eulerian data,
so segment values are exact. Node-valued copies use the value of the
segment to the right (the last node repeats the last segment).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .eulerian import EulerianState
from .measures import RadonMeasure, cumulative_open, total_mass
from .wave_speed import WaveSpeedModel

BISECT_TOL = 1e-12


def _sup_bisect(F, target, lo, hi, tol=BISECT_TOL):
    """sup{x : F(x) < target} for nondecreasing F, vectorized over ``target``."""
    target = np.asarray(target, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), target.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).copy()
    n = int(math.ceil(math.log2(max(float(np.max(hi - lo)), tol) / tol))) + 1
    for _ in range(max(n, 1)):
        mid = 0.5 * (lo + hi)
        below = F(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _snap_to_atoms(x, pos, tol=1e-10):
    if pos.size == 0:
        return x
    k = np.clip(np.searchsorted(pos, x), 1, pos.size - 1) if pos.size > 1 else np.zeros_like(x, dtype=int)
    out = np.array(x, dtype=float, copy=True)
    for kk in (k - 1, k) if pos.size > 1 else (k,):
        near = np.abs(out - pos[kk]) < tol
        out = np.where(near, pos[kk], out)
    return out


def x1_of(mu0: RadonMeasure, X):
    """sup{x : x + mu0((-inf, x)) < X}."""
    Xa = np.asarray(X, dtype=float)
    tot = total_mass(mu0)
    r = _sup_bisect(lambda x: x + cumulative_open(mu0, x), Xa, Xa - tot - 1.0, Xa + 1.0)
    r = _snap_to_atoms(r, mu0.atom_pos)
    return float(r) if np.ndim(X) == 0 else r


x2_of = x1_of


def xbar_of(state: EulerianState, s):
    """sup{x : 2x + (mu0+nu0)((-inf, x)) < 2s}."""
    sa = np.asarray(s, dtype=float)
    tot = total_mass(state.mu) + total_mass(state.nu)

    def F(x):
        return 2.0 * x + cumulative_open(state.mu, x) + cumulative_open(state.nu, x)

    r = _sup_bisect(F, 2.0 * sa, sa - 0.5 * tot - 1.0, sa + 1.0)
    pos = np.union1d(state.mu.atom_pos, state.nu.atom_pos)
    r = _snap_to_atoms(r, pos)
    return float(r) if np.ndim(s) == 0 else r


def _atom_at(m: RadonMeasure, x):
    if m.atom_pos.size == 0:
        return np.zeros_like(x)
    k = np.searchsorted(m.atom_pos, x)
    k = np.clip(k, 0, m.atom_pos.size - 1)
    return np.where(m.atom_pos[k] == x, m.atom_mass[k], 0.0)


def curve_points(state: EulerianState, s):
    """(Xbar, Ybar, xbar) at arbitrary s using the sup conventions.

    Where the two plateaus meet, the nu-plateau (vertical segment) comes first.
    """
    s = np.asarray(s, dtype=float)
    xb = xbar_of(state, s)
    Fm = cumulative_open(state.mu, xb)
    Fn = cumulative_open(state.nu, xb)
    a = _atom_at(state.mu, xb)
    b = _atom_at(state.nu, xb)
    s0 = xb + 0.5 * (Fm + Fn)
    sig = np.clip(2.0 * (s - s0), 0.0, a + b)
    Y = xb + Fn + np.minimum(sig, b)
    X = 2.0 * s - Y
    return X, Y, xb


@dataclass(frozen=True, eq=False)
class InitialCurve:
    s: np.ndarray
    Xbar: np.ndarray
    Ybar: np.ndarray
    xbar: np.ndarray
    Ubar: np.ndarray
    J1: np.ndarray
    J2: np.ndarray
    Zxi_seg: np.ndarray     # (K, 4): t, x, U, J derivatives in xi per segment
    Zeta_seg: np.ndarray    # (K, 4)
    energy: float

    @property
    def n_segments(self) -> int:
        return self.s.size - 1

    @property
    def Jbar(self) -> np.ndarray:
        return self.J1 + self.J2

    @property
    def dxi(self) -> np.ndarray:
        return np.diff(self.Xbar)

    @property
    def deta(self) -> np.ndarray:
        return np.diff(self.Ybar)

    @property
    def Zxi(self) -> np.ndarray:
        return np.vstack([self.Zxi_seg, self.Zxi_seg[-1:]])

    @property
    def Zeta(self) -> np.ndarray:
        return np.vstack([self.Zeta_seg, self.Zeta_seg[-1:]])

    @property
    def Z(self) -> np.ndarray:
        return np.column_stack([np.zeros_like(self.s), self.xbar, self.Ubar, self.Jbar])

    def check_relations(self, model: WaveSpeedModel):
        return check_relations(self, model)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "Xbar", "Ybar", "xbar", "Ubar", "t_xi", "x_xi", "U_xi", "J_xi",
                    "t_eta", "x_eta", "U_eta", "J_eta"])
        zx, ze = self.Zxi, self.Zeta
        for k in range(self.s.size):
            w.writerow([repr(float(v)) for v in
                        (self.s[k], self.Xbar[k], self.Ybar[k], self.xbar[k], self.Ubar[k],
                         *zx[k], *ze[k])])
        return buf.getvalue()


def _u_at(state: EulerianState, x):
    return np.interp(x, state.grid, state.u)


def aligned_nodes(state: EulerianState, h: float, margin: float = 0.0):
    """Curve samples aligned with grid cells and atoms, each step <= h in xi and eta.

    Returns (Xbar, Ybar, xbar, cell index per segment, kind per segment), kind
    being 0 for a cell, 1 for a nu-atom piece and 2 for a mu-atom piece.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    g = state.grid
    pieces = []  # (dxi, deta, dx, cell, kind)
    a_mu = dict(state.mu.atoms)
    a_nu = dict(state.nu.atoms)
    for p in list(a_mu) + list(a_nu):
        if not np.any(np.isclose(g, p, rtol=0, atol=1e-12)):
            raise ValueError(f"atom at {p} is not on a grid node")
    node_atoms_mu = np.zeros(g.size)
    node_atoms_nu = np.zeros(g.size)
    for p, m in a_mu.items():
        node_atoms_mu[int(np.argmin(np.abs(g - p)))] += m
    for p, m in a_nu.items():
        node_atoms_nu[int(np.argmin(np.abs(g - p)))] += m
    Mmu, Mnu, dxs = state.mu.masses, state.nu.masses, np.diff(g)
    if margin > 0:
        pieces.append((margin, margin, margin, -1, 0))
    for m in range(g.size):
        if node_atoms_nu[m] > 0:
            pieces.append((0.0, node_atoms_nu[m], 0.0, m, 1))
        if node_atoms_mu[m] > 0:
            pieces.append((node_atoms_mu[m], 0.0, 0.0, m, 2))
        if m < g.size - 1:
            pieces.append((dxs[m] + Mmu[m], dxs[m] + Mnu[m], dxs[m], m, 0))
    if margin > 0:
        pieces.append((margin, margin, margin, g.size - 1, 0))
    dxi, deta, dxb, cell, kind = [], [], [], [], []
    for pxi, peta, pdx, c, k in pieces:
        n = max(1, int(math.ceil(max(pxi, peta) / h - 1e-9)))
        dxi.append(np.full(n, pxi / n))
        deta.append(np.full(n, peta / n))
        dxb.append(np.full(n, pdx / n))
        cell.append(np.full(n, c))
        kind.append(np.full(n, k))
    dxi = np.concatenate(dxi)
    deta = np.concatenate(deta)
    dxb = np.concatenate(dxb)
    x0 = g[0] - margin
    X = x0 + np.concatenate(([0.0], np.cumsum(dxi)))
    Y = x0 + np.concatenate(([0.0], np.cumsum(deta)))
    xb = x0 + np.concatenate(([0.0], np.cumsum(dxb)))
    return X, Y, xb, np.concatenate(cell), np.concatenate(kind)


def _fill_degenerate(Z, live):
    """Give zero-length segments the value of the nearest live neighbour (right first)."""
    Z = Z.copy()
    idx = np.nonzero(live)[0]
    if idx.size == 0:
        return Z
    dead = np.nonzero(~live)[0]
    k = np.searchsorted(idx, dead)
    k = np.where(k >= idx.size, idx.size - 1, k)
    Z[dead] = Z[idx[k]]
    return Z


def build_curve(state: EulerianState, model: WaveSpeedModel, h: float | None = None,
                s_grid=None, margin: float = 0.0) -> InitialCurve:
    """Initial curve with Z, Z_xi, Z_eta.

    With ``h`` the samples are aligned with the data (exact relations); with an
    explicit ``s_grid`` the sup definitions are evaluated by bisection and the
    derivatives are segment averages.
    """
    g = state.grid
    if h is not None:
        X, Y, xb, cell, kind = aligned_nodes(state, h, margin)
    elif s_grid is not None:
        s_grid = np.asarray(s_grid, dtype=float)
        if np.any(np.diff(s_grid) <= 0):
            raise ValueError("s_grid must be increasing")
        X, Y, xb = curve_points(state, s_grid)
        cell = kind = None
    else:
        raise ValueError("need h or s_grid")
    s = 0.5 * (X + Y)
    if np.any(np.diff(xb) < -1e-12):
        raise ValueError("non-monotone cumulative data")
    U = _u_at(state, xb)
    dX, dY, dx = np.diff(X), np.diff(Y), np.diff(xb)
    Um = 0.5 * (U[1:] + U[:-1])
    cm = model.eval(Um)[0]
    live_x = dX > 0
    live_y = dY > 0
    if cell is not None:
        Rc = np.where(cell >= 0, state.R[np.clip(cell, 0, g.size - 2)], 0.0)
        Sc = np.where(cell >= 0, state.S[np.clip(cell, 0, g.size - 2)], 0.0)
        Rc = np.where((cell >= g.size - 1) | (kind != 0), 0.0, Rc)
        Sc = np.where((cell >= g.size - 1) | (kind != 0), 0.0, Sc)
        x1p = np.where(live_x, dx / np.where(live_x, dX, 1.0), 0.0)
        x2p = np.where(live_y, dx / np.where(live_y, dY, 1.0), 0.0)
        intR = Rc * dx
        intS = Sc * dx
    else:
        x1p = np.where(live_x, dx / np.where(live_x, dX, 1.0), 0.0)
        x2p = np.where(live_y, dx / np.where(live_y, dY, 1.0), 0.0)
        CR = np.concatenate(([0.0], np.cumsum(np.nan_to_num(state.R) * np.diff(g))))
        CS = np.concatenate(([0.0], np.cumsum(np.nan_to_num(state.S) * np.diff(g))))
        intR = np.diff(np.interp(xb, g, CR))
        intS = np.diff(np.interp(xb, g, CS))
    safeX = np.where(live_x, dX, 1.0)
    safeY = np.where(live_y, dY, 1.0)
    Zxi = np.column_stack([x1p / (2 * cm), 0.5 * x1p, intR / (2 * cm * safeX), 1.0 - x1p])
    Zeta = np.column_stack([-x2p / (2 * cm), 0.5 * x2p, -intS / (2 * cm * safeY), 1.0 - x2p])
    Zxi[~live_x, 2] = 0.0
    Zeta[~live_y, 2] = 0.0
    Zxi = _fill_degenerate(Zxi, live_x)
    Zeta = _fill_degenerate(Zeta, live_y)
    J1 = X - xb
    J2 = Y - xb
    E0 = total_mass(state.mu) + total_mass(state.nu)
    return InitialCurve(s, X, Y, xb, U, J1, J2, Zxi, Zeta, E0)


@dataclass(frozen=True)
class RelationReport:
    sum_residual: float        # Xbar + Ybar - 2s
    g_xi: float                # 2 x_xi + J_xi - 1
    g_eta: float
    seebreak_xi: float         # (c U_xi)^2 - 2 x_xi J_xi
    seebreak_eta: float
    tx_xi: float               # x_xi - c t_xi
    tx_eta: float              # x_eta + c t_eta
    tol: float = 1e-10

    @property
    def worst(self) -> float:
        return max(self.sum_residual, self.g_xi, self.g_eta, self.seebreak_xi,
                   self.seebreak_eta, self.tx_xi, self.tx_eta)

    @property
    def ok(self) -> bool:
        return self.worst <= self.tol

    def to_dict(self):
        d = dict(self.__dict__)
        d["ok"] = self.ok
        return d


def check_relations(curve: InitialCurve, model: WaveSpeedModel, tol: float = 1e-10) -> RelationReport:
    """Largest residual of each identity over segments of positive length."""
    Um = 0.5 * (curve.Ubar[1:] + curve.Ubar[:-1])
    c = model.eval(Um)[0]
    lx, ly = curve.dxi > 0, curve.deta > 0
    zx, ze = curve.Zxi_seg, curve.Zeta_seg

    def mx(v, mask):
        v = np.abs(v[mask])
        return float(v.max()) if v.size else 0.0

    return RelationReport(
        sum_residual=float(np.max(np.abs(curve.Xbar + curve.Ybar - 2 * curve.s))),
        g_xi=mx(2 * zx[:, 1] + zx[:, 3] - 1.0, lx),
        g_eta=mx(2 * ze[:, 1] + ze[:, 3] - 1.0, ly),
        seebreak_xi=mx((c * zx[:, 2]) ** 2 - 2 * zx[:, 1] * zx[:, 3], lx),
        seebreak_eta=mx((c * ze[:, 2]) ** 2 - 2 * ze[:, 1] * ze[:, 3], ly),
        tx_xi=mx(zx[:, 1] - c * zx[:, 0], lx),
        tx_eta=mx(ze[:, 1] + c * ze[:, 0], ly),
        tol=tol,
    )
