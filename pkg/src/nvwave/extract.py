"""Eulerian slices u(T), R(T), S(T), mu(T), nu(T) from a Lagrangian field.

Inside a cell t is bilinear, so the level set {t = T} enters through the
left or bottom edge and leaves through the top or right edge. The slice is
the polyline through these crossings; on each piece Z_xi is linear in eta
and Z_eta linear in xi, so the masses J_xi d xi and J_eta d eta are exact
and the total energy telescopes to J(end) - J(start).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .eulerian import EulerianState
from .goursat import LagrangianField, Side
from .measures import PLATEAU_REL, RadonMeasure
from .wave_speed import WaveSpeedModel


NEG_MASS_REL = 1e-8
ATOM_MIN_REL = 1e-12


class OutOfRange(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TimeSlice:
    T: float
    s: np.ndarray            # path samples, s = (xi + eta) / 2
    Xs: np.ndarray
    Ys: np.ndarray
    x_of_s: np.ndarray
    U_of_s: np.ndarray
    state: EulerianState
    mu_pieces: np.ndarray    # mass carried by each piece
    nu_pieces: np.ndarray
    monotonicity_fixes: int = 0
    x_xi_pieces: np.ndarray | None = None    # x_xi, x_eta on each piece; 0 marks atoms
    x_eta_pieces: np.ndarray | None = None

    def atom_pieces(self, which: str = "mu", tol: float = 0.0):
        """Mask of pieces that carry mass while x_xi (mu) or x_eta (nu) is <= tol."""
        m, xd = (self.mu_pieces, self.x_xi_pieces) if which == "mu" else (self.nu_pieces, self.x_eta_pieces)
        return (m > 0) & (xd <= tol)

    def piece_x(self) -> np.ndarray:
        """x at the start of each piece."""
        return self.x_of_s[:-1]

    def energy(self) -> float:
        return self.state.energy()

    def to_csv(self) -> str:
        return self.state.to_csv()

    def to_dict(self) -> dict:
        d = self.state.to_dict()
        d["T"] = self.T
        return d


def _pieces_curve(field: LagrangianField):
    cv = field.curve
    n = cv.n_segments
    P = np.column_stack([cv.Xbar, cv.Ybar])
    Zp = cv.Z
    Axi = cv.Zxi_seg
    Aeta = cv.Zeta_seg
    return (P[:-1], P[1:], Zp[:-1], Zp[1:], Axi, Aeta, np.zeros(n))


def _pieces_side(side: Side, T: float):
    """Pieces of the level set on one side, in the side's own coordinates."""
    sd = side.direction
    th = sd * T
    xi, eta = side.xi, side.eta
    dX, dY = side.dxi, side.deta
    out = []
    last = side.n_fronts
    if last < 1:
        raise OutOfRange("field has no fronts on this side")
    tl = side.Z[last][:, 0]
    tl2 = side.Z[last - 1][:, 0] if last >= 2 else np.array([-np.inf])
    reach = np.concatenate((sd * tl, sd * tl2))
    reach = reach[~np.isnan(reach)]
    if reach.size == 0 or reach.min() < th:
        raise OutOfRange(f"T={T} is outside the solved time range")
    for d in range(1, last + 1):
        Zd = side.Z[d]
        n = Zd.shape[0]
        j = np.arange(n)
        i = j + d
        P = Zd
        W = side.Z[d - 1][:n]
        N = side.Z[d - 1][1:n + 1]
        tau_P, tau_W, tau_N = sd * P[:, 0], sd * W[:, 0], sd * N[:, 0]
        if d >= 2:
            NW = side.Z[d - 2][1:n + 1]
            tau_NW = sd * NW[:, 0]
            top = side.bottom[d - 1][1:n + 1]
        else:
            NW = None
            tau_NW = np.full(n, -np.inf)
            top = None
        left = side.right[d - 1][:n] if d >= 2 else None
        sel = (tau_NW < th) & (th <= tau_P)
        sel &= ~np.isnan(tau_P)
        if not np.any(sel):
            continue
        k = np.nonzero(sel)[0]
        ii, jj = i[k], j[k]
        bot = side.bottom[d][k]
        rgt = side.right[d][k]
        F = side.F[d][k]
        dxi = dX[ii - 1]
        deta = dY[jj]
        Wk, Pk = W[k], P[k]
        # entry point
        enter_left = tau_W[k] >= th
        # bottom edge from W
        slope_b = sd * bot[:, 0] * dxi
        a = np.clip(np.where(slope_b > 0, (th - tau_W[k]) / np.where(slope_b > 0, slope_b, 1), 1.0), 0, 1)
        pb = np.column_stack([xi[ii - 1] + a * dxi, eta[jj]])
        Zb = Wk + (a * dxi)[:, None] * bot
        if d >= 2:
            lft = left[k]
            slope_l = sd * lft[:, 0] * deta  # tau change from W up to NW (negative)
            b = np.clip(np.where(slope_l < 0, (th - tau_W[k]) / np.where(slope_l < 0, slope_l, -1), 0.0), 0, 1)
            pl = np.column_stack([xi[ii - 1], eta[jj] + b * deta])
            Zl = Wk + (b * deta)[:, None] * lft
            p = np.where(enter_left[:, None], pl, pb)
            Zp = np.where(enter_left[:, None], Zl, Zb)
        else:
            p, Zp = pb, Zb
        # exit point
        exit_top = tau_N[k] >= th
        slope_r = sd * rgt[:, 0] * deta  # tau change from P up to N (negative)
        b2 = np.clip(np.where(slope_r < 0, (th - tau_P[k]) / np.where(slope_r < 0, slope_r, -1), 0.0), 0, 1)
        pr = np.column_stack([xi[ii], eta[jj] + b2 * deta])
        Zr = Pk + (b2 * deta)[:, None] * rgt
        if d >= 2:
            tp = top[k]
            NWk = NW[k]
            slope_t = sd * tp[:, 0] * dxi
            a2 = np.clip(np.where(slope_t > 0, (th - tau_NW[k]) / np.where(slope_t > 0, slope_t, 1), 1.0), 0, 1)
            pt = np.column_stack([xi[ii - 1] + a2 * dxi, eta[jj + 1]])
            Zt = NWk + (a2 * dxi)[:, None] * tp
            q = np.where(exit_top[:, None], pt, pr)
            Zq = np.where(exit_top[:, None], Zt, Zr)
        else:
            q, Zq = pr, Zr
        eta_mid = 0.5 * (p[:, 1] + q[:, 1])
        xi_mid = 0.5 * (p[:, 0] + q[:, 0])
        Axi = bot + (eta_mid - eta[jj])[:, None] * F
        Aeta = rgt - (xi[ii] - xi_mid)[:, None] * F
        out.append((p, q, Zp, Zq, Axi, Aeta))
    if not out:
        raise OutOfRange(f"level set t={T} not found in the field")
    p, q, Zp, Zq, Axi, Aeta = (np.vstack([o[m] for o in out]) for m in range(6))
    key = np.lexsort((p[:, 0], p[:, 0] + p[:, 1]))
    return p[key], q[key], Zp[key], Zq[key], Axi[key], Aeta[key]


def default_eps_break(field: LagrangianField) -> float:
    """1e-3 times the median of x_xi along the curve, weighted by segment length."""
    cv = field.curve
    w = cv.dxi + cv.deta
    xx = cv.Zxi_seg[:, 1]
    if not np.any(w > 0):
        return 1e-3 * float(np.median(xx))
    order = np.argsort(xx)
    cw = np.cumsum(w[order])
    k = int(np.searchsorted(cw, 0.5 * cw[-1]))
    return 1e-3 * float(xx[order][k])


def extract(field: LagrangianField, model: WaveSpeedModel, T: float,
            eps_break: float | None = None) -> TimeSlice:
    """Eulerian state at time T."""
    eps = default_eps_break(field) if eps_break is None else eps_break
    T = float(T)
    if T == 0.0:
        p, q, Zp, Zq, Axi, Aeta, _ = _pieces_curve(field)
        transposed = False
    else:
        side = field.side_for(T)
        p, q, Zp, Zq, Axi, Aeta = _pieces_side(side, T)
        transposed = side.transposed
    dxi = np.maximum(q[:, 0] - p[:, 0], 0.0)
    deta = np.maximum(q[:, 1] - p[:, 1], 0.0)
    mu_m = dxi * Axi[:, 3]
    nu_m = deta * Aeta[:, 3]
    # J_xi, J_eta >= 0 holds up to scheme error; clip round-off sized negatives
    tol = NEG_MASS_REL * max(float(np.sum(np.abs(mu_m)) + np.sum(np.abs(nu_m))), 1.0)
    worst = min(float(mu_m.min(initial=0.0)), float(nu_m.min(initial=0.0)))
    if worst < -tol:
        raise ValueError(f"negative mass {worst:.3e} in the slice at t={T}")
    mu_m = np.maximum(mu_m, 0.0)
    nu_m = np.maximum(nu_m, 0.0)
    Um = 0.5 * (Zp[:, 2] + Zq[:, 2])
    c = model.eval(Um)[0]
    xxi, xeta = Axi[:, 1].copy(), Aeta[:, 1].copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        Rv = np.where((dxi > 0) & (Axi[:, 1] >= eps), c * Axi[:, 2] / Axi[:, 1], np.nan)
        Sv = np.where((deta > 0) & (Aeta[:, 1] >= eps), -c * Aeta[:, 2] / Aeta[:, 1], np.nan)
    if transposed:
        mu_m, nu_m = nu_m, mu_m
        Rv, Sv = -Sv, -Rv
        xxi, xeta = xeta, xxi
        p = p[:, ::-1]
        q = q[:, ::-1]
    pts = np.vstack([p, q[-1:]])
    Zpts = np.vstack([Zp, Zq[-1:]])
    x = Zpts[:, 1].copy()
    xm = np.maximum.accumulate(x)
    fixes = int(np.sum(xm - x > 1e-12 * max(1.0, float(np.ptp(x)))))
    x = xm
    state = _assemble_state(T, x, Zpts[:, 2], Rv, Sv, mu_m, nu_m)
    s = 0.5 * (pts[:, 0] + pts[:, 1])
    return TimeSlice(T, s, pts[:, 0], pts[:, 1], x, Zpts[:, 2], state, mu_m, nu_m, fixes, xxi, xeta)


def _assemble_state(T, x, U, R, S, mu_m, nu_m, plateau_rel=PLATEAU_REL) -> EulerianState:
    dx = np.diff(x)
    span = float(x[-1] - x[0])
    plateau = dx < plateau_rel * max(span, 1e-300)
    cells = ~plateau
    start = np.concatenate(([0], np.cumsum(cells)[:-1]))
    nodes = np.concatenate(([x[0]], x[1:][cells]))
    unodes = np.concatenate(([U[0]], U[1:][cells]))
    total = float(np.sum(mu_m) + np.sum(nu_m))
    measures = []
    for m in (mu_m, nu_m):
        a = np.bincount(start[plateau], weights=m[plateau], minlength=nodes.size)
        cm = m[cells].copy()
        # plateaus with negligible mass stay absolutely continuous
        tiny = (a > 0) & (a <= ATOM_MIN_REL * total)
        if np.any(tiny) and cm.size:
            k = np.nonzero(tiny)[0]
            np.add.at(cm, np.minimum(k, cm.size - 1), a[k])
            a[k] = 0.0
        keep = a > 0
        measures.append(RadonMeasure(nodes, cm, nodes[keep], a[keep]))
    return EulerianState(nodes, unodes, R[cells], S[cells], measures[0], measures[1], T)


@dataclass(frozen=True)
class HolderReport:
    D: float
    pairs: int
    violations: int            # distinct points only
    max_ratio: float           # max |du| / (D sqrt(|dt| + |dx|)) over distinct points
    coincident: int = 0        # pairs of nodes on the same (t, x); the bound gives no room there
    coincident_du: float = 0.0 # their largest |du|, a discretization error of order h^2

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_dict(self):
        d = dict(self.__dict__)
        d["ok"] = self.ok
        return d


def holder_check(field: LagrangianField, model: WaveSpeedModel, pairs=10000, seed: int = 0,
                 D: float | None = None) -> HolderReport:
    """|u(t1,x1) - u(t2,x2)| <= D sqrt(|dt| + |dx|) on pairs of solution points.

    ``pairs`` is either a count of random node pairs or an (n, 2, 3) array of
    (t, x, u) points.
    """
    from .breaking import holder_constant

    if D is None:
        D = holder_constant(model.kappa, field.curve.energy)
    if np.ndim(pairs) == 0:
        _, _, Z = field.nodes()
        rng = np.random.default_rng(seed)
        a = rng.integers(0, Z.shape[0], int(pairs))
        b = rng.integers(0, Z.shape[0], int(pairs))
        P1, P2 = Z[a][:, :3], Z[b][:, :3]
    else:
        arr = np.asarray(pairs, dtype=float)
        P1, P2 = arr[:, 0], arr[:, 1]
    du = np.abs(P1[:, 2] - P2[:, 2])
    rhs = D * np.sqrt(np.abs(P1[:, 0] - P2[:, 0]) + np.abs(P1[:, 1] - P2[:, 1]))
    # nodes on the same point only test that u is single valued there
    same = (P1[:, 0] == P2[:, 0]) & (P1[:, 1] == P2[:, 1])
    d, r = du[~same], rhs[~same]
    viol = d > r + 1e-12
    ratio = d / r if d.size else np.zeros(0)
    return HolderReport(float(D), int(du.size), int(viol.sum()),
                        float(ratio.max()) if ratio.size else 0.0,
                        int(same.sum()), float(du[same].max()) if same.any() else 0.0)


def slice_table_csv(sl: TimeSlice) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s", "xi", "eta", "x", "u"])
    for r in zip(sl.s, sl.Xs, sl.Ys, sl.x_of_s, sl.U_of_s):
        w.writerow([repr(float(v)) for v in r])
    return buf.getvalue()
