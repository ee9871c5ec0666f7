"""Goursat solver for the Lagrangian system Z_{xi eta} = F(U, Z_xi, Z_eta).

Grid: the xi and eta nodes are the curve samples, so the curve runs through
the nodes (k, k). Z lives on nodes, Z_xi on horizontal edges and Z_eta on
vertical edges (a staggered layout). Every cell is closed by the midpoint
rule

    bottom = top - d_eta * F_C,    right = left + d_xi * F_C,

with F_C evaluated at the cell centre, and the new corner is the mean of
the two paths W + d_xi * bottom and N - d_eta * right. Both paths agree up
to the fixed-point tolerance; their gap is kept as a residual.

Cells are stored by front d = i - j. The region above the curve (t < 0) is
solved with the same routine on the transposed data, using the symmetry of
F in (Z_xi, Z_eta).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .lagrangian_init import InitialCurve
from .wave_speed import WaveSpeedModel


class StepFailure(RuntimeError):
    """Fixed-point iteration did not converge in a cell."""

    def __init__(self, msg, side=None, front=None, index=None):
        super().__init__(msg)
        self.side = side
        self.front = front
        self.index = index


@dataclass(frozen=True)
class SolverConfig:
    h: float = 1.0 / 64
    fp_tol: float = 1e-12
    fp_max_iter: int = 50
    t_max: float = 1.0          # march below the curve until t >= t_max everywhere on a front
    t_min: float = 0.0          # and above the curve until t <= t_min
    band: float = np.inf        # half-width L of the strip around the curve
    max_fronts: int = 100000

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        if not self.fp_tol > 0:
            raise ValueError("fp_tol must be positive")
        if self.fp_max_iter < 1:
            raise ValueError("fp_max_iter must be >= 1")
        if self.t_min > 0 or self.t_max < 0:
            raise ValueError("need t_min <= 0 <= t_max")
        if not self.band > 0:
            raise ValueError("band must be positive")


def lagr_rhs(model: WaveSpeedModel, U, A, B):
    """Right-hand side of the Lagrangian system; A = Z_xi, B = Z_eta (n x 4)."""
    c, cp, _ = model.eval(np.asarray(U, dtype=float))
    c = np.atleast_1d(c)
    cp = np.atleast_1d(cp)
    k1 = cp / (2.0 * c)
    F = np.empty(np.broadcast(A, B).shape)
    F[..., 0] = -k1 * (A[..., 0] * B[..., 2] + B[..., 0] * A[..., 2])
    F[..., 1] = k1 * (A[..., 1] * B[..., 2] + B[..., 1] * A[..., 2])
    F[..., 2] = cp / (2.0 * c ** 3) * (A[..., 1] * B[..., 3] + B[..., 1] * A[..., 3]) - k1 * A[..., 2] * B[..., 2]
    F[..., 3] = k1 * (A[..., 3] * B[..., 2] + B[..., 3] * A[..., 2])
    return F


@dataclass(eq=False)
class Side:
    """One side of the curve, stored front by front.

    For front d >= 1, arrays are indexed by j = i - d (the eta index of the
    cell's lower-right node P). ``bottom[d][j]`` is Z_xi on the edge
    (i-1/2, j), ``right[d][j]`` is Z_eta on (i, j+1/2), ``F[d][j]`` the
    cell value of F and ``Z[d][j]`` the node P. ``Z[0]`` holds the curve.
    When ``transposed`` is set the roles of xi and eta are swapped with
    respect to the physical field.
    """

    xi: np.ndarray
    eta: np.ndarray
    transposed: bool
    Z: list = field(default_factory=list)
    bottom: list = field(default_factory=list)
    right: list = field(default_factory=list)
    F: list = field(default_factory=list)
    closure: list = field(default_factory=list)
    iterations: int = 0
    curve_xi_nodes: np.ndarray | None = None
    curve_eta_nodes: np.ndarray | None = None

    @property
    def K(self) -> int:
        return self.xi.size - 1

    @property
    def n_fronts(self) -> int:
        return len(self.Z) - 1

    @property
    def dxi(self):
        return np.diff(self.xi)

    @property
    def deta(self):
        return np.diff(self.eta)

    @property
    def direction(self) -> int:
        """+1 if t grows with the front index, -1 otherwise."""
        return -1 if self.transposed else 1

    def t_grid(self) -> np.ndarray:
        """t on nodes as a (n_fronts+1, K+1) array indexed by (d, j); NaN outside."""
        out = np.full((self.n_fronts + 1, self.K + 1), np.nan)
        for d, Zd in enumerate(self.Z):
            out[d, :Zd.shape[0]] = Zd[:, 0]
        return out


def _march(side: Side, Zc, Zxs, Zes, model, cfg: SolverConfig, t_stop: float):
    """Fill ``side`` front by front until t passes ``t_stop`` (signed by direction)."""
    K = side.K
    dX, dY = side.dxi, side.deta
    sgn = side.direction
    side.Z = [Zc.copy()]
    side.bottom = [None]
    side.right = [None]
    side.F = [None]
    side.closure = [0.0]
    # d = 1: triangles cut by the curve, corners W = (k,k), N = (k+1,k+1)
    Um = 0.5 * (Zc[:-1, 2] + Zc[1:, 2])
    FM = lagr_rhs(model, Um, Zxs, Zes)
    bot = Zxs - 0.5 * dY[:, None] * FM
    rgt = Zes + 0.5 * dX[:, None] * FM
    P1 = Zc[:-1] + dX[:, None] * bot
    P2 = Zc[1:] - dY[:, None] * rgt
    side.Z.append(0.5 * (P1 + P2))
    side.bottom.append(bot)
    side.right.append(rgt)
    side.F.append(FM)
    side.closure.append(float(np.max(np.abs(P1 - P2))) if K else 0.0)
    _apply_band(side, 1, cfg.band)
    d = 1
    while d < min(K, cfg.max_fronts):
        tf = side.Z[d][:, 0]
        if tf.size == 0 or np.all(np.isnan(tf)):
            break
        # the level set can cut the corner of a cell one front ahead, so two
        # consecutive fronts must be past t_stop
        if np.nanmin(sgn * tf) > sgn * t_stop and np.nanmin(sgn * side.Z[d - 1][:, 0]) > sgn * t_stop:
            break
        d += 1
        n = K + 1 - d
        # indices: node P = (i, j), i = j + d; dxi uses i-1, deta uses j
        dxi = dX[d - 1:d - 1 + n][:, None]
        deta = dY[:n][:, None]
        # W = (i-1, j) and N = (i, j+1) lie on front d-1, NW = (i-1, j+1) on d-2
        W, N = side.Z[d - 1][:n], side.Z[d - 1][1:n + 1]
        NW = side.Z[d - 2][1:n + 1]
        top = side.bottom[d - 1][1:n + 1]
        left = side.right[d - 1][:n]
        bot = top.copy()
        rgt = left.copy()
        UP = W[:, 2] + N[:, 2] - NW[:, 2]
        it = 0
        while True:
            UC = 0.25 * (NW[:, 2] + W[:, 2] + N[:, 2] + UP)
            F = lagr_rhs(model, UC, 0.5 * (top + bot), 0.5 * (left + rgt))
            nb = top - deta * F
            nr = left + dxi * F
            P1 = W + dxi * nb
            P2 = N - deta * nr
            nU = 0.5 * (P1[:, 2] + P2[:, 2])
            delta = np.concatenate([np.abs(nb - bot).ravel(), np.abs(nr - rgt).ravel(),
                                    np.abs(nU - UP)])
            bot, rgt, UP = nb, nr, nU
            it += 1
            dmax = np.nanmax(delta) if delta.size and not np.all(np.isnan(delta)) else 0.0
            if dmax <= cfg.fp_tol:
                break
            if it >= cfg.fp_max_iter:
                bad = int(np.nanargmax(np.max(np.abs(nb - top), axis=1)))
                raise StepFailure(
                    f"fixed point did not converge on front {d} at j={bad} (delta={dmax:.3e})",
                    side="above" if side.transposed else "below", front=d, index=bad)
        side.iterations = max(side.iterations, it)
        side.Z.append(0.5 * (P1 + P2))
        side.bottom.append(bot)
        side.right.append(rgt)
        side.F.append(F)
        gap = np.abs(P1 - P2)
        side.closure.append(float(np.nanmax(gap)) if gap.size and not np.all(np.isnan(gap)) else 0.0)
        _apply_band(side, d, cfg.band)
    return side


def _apply_band(side: Side, d: int, band: float):
    if not np.isfinite(band):
        return
    n = side.Z[d].shape[0]
    j = np.arange(n)
    i = j + d
    dist = np.minimum(side.xi[i] - side.xi[j], side.eta[i] - side.eta[j])
    out = dist >= band
    if np.any(out):
        for arr in (side.Z[d], side.bottom[d], side.right[d], side.F[d]):
            arr[out] = np.nan


@dataclass(eq=False)
class LagrangianField:
    curve: InitialCurve
    below: Side
    above: Side
    config: SolverConfig
    model_name: str = ""

    @property
    def xi_grid(self):
        return self.curve.Xbar

    @property
    def eta_grid(self):
        return self.curve.Ybar

    def side_for(self, T: float) -> Side:
        return self.below if T >= 0 else self.above

    def t_range(self):
        lo = min(np.nanmin(Zd[:, 0]) for Zd in self.above.Z if Zd.size)
        hi = max(np.nanmax(Zd[:, 0]) for Zd in self.below.Z if Zd.size)
        return float(lo), float(hi)

    def slice_range(self):
        """Times T for which the whole level set {t = T} lies in the solved region."""
        def edge(side, f):
            if side.n_fronts < 2:
                return 0.0
            return float(f(f(side.Z[-1][:, 0]), f(side.Z[-2][:, 0])))

        lo = edge(self.above, lambda *a: np.nanmax(np.hstack(a)))
        hi = edge(self.below, lambda *a: np.nanmin(np.hstack(a)))
        return min(lo, 0.0), max(hi, 0.0)

    def nodes(self):
        """All nodes as arrays (xi, eta, Z) in physical orientation."""
        xs, es, zs = [], [], []
        for side in (self.below, self.above):
            start = 0 if side is self.below else 1
            for d in range(start, len(side.Z)):
                Zd = side.Z[d]
                j = np.arange(Zd.shape[0])
                i = j + d
                a, b = side.xi[i], side.eta[j]
                if side.transposed:
                    a, b = b, a
                xs.append(a)
                es.append(b)
                zs.append(Zd)
        Z = np.vstack(zs)
        ok = ~np.isnan(Z).any(axis=1)
        return np.concatenate(xs)[ok], np.concatenate(es)[ok], Z[ok]

    def edges(self):
        """Edge data in physical orientation.

        Returns two dicts (for Z_xi and Z_eta edges) with keys
        'value' (n x 4), 'U' (edge-mean U), 'length' and the node indices.
        """
        out = {"xi": [], "eta": []}
        for side in (self.below, self.above):
            for d in range(1, len(side.Z)):
                Zd = side.Z[d]
                n = Zd.shape[0]
                j = np.arange(n)
                i = j + d
                # bottom edge joins (i-1, j) and P
                Wb = side.Z[d - 1][:n]
                Nr = side.Z[d - 1][1:n + 1]
                Ub = 0.5 * (Wb[:, 2] + Zd[:, 2])
                Ur = 0.5 * (Nr[:, 2] + Zd[:, 2])
                kb = "eta" if side.transposed else "xi"
                kr = "xi" if side.transposed else "eta"
                out[kb].append((side.bottom[d], Ub, side.dxi[i - 1], d, j, side))
                out[kr].append((side.right[d], Ur, side.deta[j], d, j, side))
        res = {}
        for k, lst in out.items():
            res[k] = {
                "value": np.vstack([a[0] for a in lst]),
                "U": np.concatenate([a[1] for a in lst]),
                "length": np.concatenate([a[2] for a in lst]),
            }
        return res["xi"], res["eta"]

    def residual_report(self, model: WaveSpeedModel):
        return residual_report(self, model)

    def to_rows(self):
        """One row per node: xi, eta, t, x, U, J, t_xi, x_xi, U_xi, J_xi, t_eta, x_eta, U_eta, J_eta.

        Node derivatives are the means of the adjacent stored edges.
        """
        rows = []
        for side in (self.below, self.above):
            start = 0 if side is self.below else 1
            for d in range(start, len(side.Z)):
                Zd = side.Z[d]
                n = Zd.shape[0]
                j = np.arange(n)
                i = j + d
                a_xi, a_eta = _node_derivatives(side, d)
                xi_c, eta_c = side.xi[i], side.eta[j]
                if side.transposed:
                    xi_c, eta_c = eta_c, xi_c
                    a_xi, a_eta = a_eta, a_xi
                rows.append(np.column_stack([xi_c, eta_c, Zd, a_xi, a_eta]))
        return np.vstack(rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["xi", "eta", "t", "x", "U", "J", "t_xi", "x_xi", "U_xi", "J_xi",
                    "t_eta", "x_eta", "U_eta", "J_eta"])
        for r in self.to_rows():
            w.writerow([repr(float(v)) for v in r])
        return buf.getvalue()

    def summary(self) -> dict:
        lo, hi = self.t_range()
        return {
            "model": self.model_name,
            "h": self.config.h,
            "segments": int(self.curve.n_segments),
            "fronts_below": self.below.n_fronts,
            "fronts_above": self.above.n_fronts,
            "t_range": [lo, hi],
            "energy": self.curve.energy,
            "max_fp_iterations": max(self.below.iterations, self.above.iterations),
            "closure_gap": max(max(self.below.closure), max(self.above.closure)),
        }

    def to_json(self) -> str:
        return json.dumps({"summary": self.summary(), "nodes": self.to_rows().tolist()}, sort_keys=True)


def _node_derivatives(side: Side, d: int):
    """Node values of (Z_xi, Z_eta) for front d, from adjacent edges."""
    if d == 0:
        return side.curve_xi_nodes, side.curve_eta_nodes
    return side.bottom[d], side.right[d]


def solve(curve: InitialCurve, model: WaveSpeedModel, config: SolverConfig | None = None) -> LagrangianField:
    """March the Lagrangian system away from the curve on both sides."""
    cfg = config or SolverConfig()
    if curve.n_segments < 1:
        raise ValueError("curve needs at least one segment")
    Zc = curve.Z
    below = Side(curve.Xbar.copy(), curve.Ybar.copy(), transposed=False,
                 curve_xi_nodes=curve.Zxi, curve_eta_nodes=curve.Zeta)
    _march(below, Zc, curve.Zxi_seg, curve.Zeta_seg, model, cfg, cfg.t_max)
    above = Side(curve.Ybar.copy(), curve.Xbar.copy(), transposed=True,
                 curve_xi_nodes=curve.Zeta, curve_eta_nodes=curve.Zxi)
    _march(above, Zc, curve.Zeta_seg, curve.Zxi_seg, model, cfg, cfg.t_min)
    return LagrangianField(curve, below, above, cfg, model.name)


@dataclass(frozen=True)
class ResidualReport:
    tx_xi: float           # max |x_xi - c t_xi|
    tx_eta: float          # max |x_eta + c t_eta|
    seebreak_xi: float     # max |(c U_xi)^2 - 2 x_xi J_xi|
    seebreak_eta: float
    sign_violation: float  # largest negative part of t_xi, -t_eta, x_xi, x_eta, J_xi, J_eta
    g_min: float           # min of 2 x_xi + J_xi and 2 x_eta + J_eta
    g_max: float
    closure_gap: float
    worst_location: tuple = ()

    @property
    def relation_max(self) -> float:
        return max(self.tx_xi, self.tx_eta, self.seebreak_xi, self.seebreak_eta)

    def to_dict(self):
        d = dict(self.__dict__)
        d["relation_max"] = self.relation_max
        d["worst_location"] = list(self.worst_location)
        return d


def residual_report(field: LagrangianField, model: WaveSpeedModel) -> ResidualReport:
    """Relations x_xi = c t_xi, (c U_xi)^2 = 2 x_xi J_xi (and eta versions) on all edges.

    Values are absolute; the normalisation 2 x_xi + J_xi = 1 on the curve
    makes every quantity of unit size, so they double as relative values.
    """
    ex, ee = field.edges()
    out = {}
    signs = []
    gs = []
    worst = (0.0, ())
    for name, e, s in (("xi", ex, 1.0), ("eta", ee, -1.0)):
        v, U, L = e["value"], e["U"], e["length"]
        ok = (L > 0) & ~np.isnan(v).any(axis=1)
        v, U = v[ok], U[ok]
        c = model.eval(U)[0]
        r1 = np.abs(v[:, 1] - s * c * v[:, 0])
        r2 = np.abs((c * v[:, 2]) ** 2 - 2 * v[:, 1] * v[:, 3])
        out["tx_" + name] = float(r1.max()) if r1.size else 0.0
        out["seebreak_" + name] = float(r2.max()) if r2.size else 0.0
        if r2.size and r2.max() > worst[0]:
            k = int(np.argmax(r2))
            worst = (float(r2[k]), (name, k))
        signs.append(np.concatenate([np.maximum(-s * v[:, 0], 0), np.maximum(-v[:, 1], 0),
                                     np.maximum(-v[:, 3], 0)]))
        gs.append(2 * v[:, 1] + v[:, 3])
    sv = np.concatenate(signs)
    g = np.concatenate(gs)
    return ResidualReport(
        tx_xi=out["tx_xi"], tx_eta=out["tx_eta"], seebreak_xi=out["seebreak_xi"],
        seebreak_eta=out["seebreak_eta"], sign_violation=float(sv.max()) if sv.size else 0.0,
        g_min=float(g.min()) if g.size else 1.0, g_max=float(g.max()) if g.size else 1.0,
        closure_gap=max(max(field.below.closure), max(field.above.closure)),
        worst_location=worst[1],
    )
