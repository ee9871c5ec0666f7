"""Breaking-time windows, the Hoelder constant, Riccati envelopes and breaking diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from .eulerian import EulerianState
from .goursat import LagrangianField, Side
from .wave_speed import WaveSpeedModel


def holder_constant(kappa: float, E0: float) -> float:
    """D with |u(t1,x1) - u(t2,x2)| <= D sqrt(|dt| + |dx|).

    The two pieces of the estimate, 2 kappa sqrt(E0) sqrt(kappa|dt| + |dx|)
    and sqrt(8 kappa) sqrt(E0) sqrt(|dt|), are merged using
    sqrt(kappa|dt| + |dx|) <= sqrt(kappa) sqrt(|dt| + |dx|).
    """
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    if E0 < 0:
        raise ValueError("E0 must be >= 0")
    return (2.0 * kappa ** 1.5 + 2.0 * math.sqrt(2.0 * kappa)) * math.sqrt(E0)


@dataclass(frozen=True)
class BreakingPrediction:
    family: str                 # "backward" (R) or "forward" (S)
    orientation: str | None     # "future" or "past"
    t_l: float | None
    t_u: float | None
    A: float | None
    b: float | None
    b_tilde: float | None
    D: float | None
    applicable: bool
    reason: str
    x_bar: float = float("nan")
    cubic_margin: float | None = None   # rhs - lhs of the cubic condition

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["window"] = None if self.t_l is None else [self.t_l, self.t_u]
        return d

    def with_reason(self, reason: str) -> "BreakingPrediction":
        return replace(self, reason=reason)


def predict_from_values(Q0: float, cp: float, kappa: float, lam: float, lam_bar: float,
                        E0: float, family: str, x_bar: float = float("nan")) -> BreakingPrediction:
    """Evaluate the three hypotheses and the window from pointwise values.

    Q0 is R0(x_bar) for the backward family and S0(x_bar) for the forward one.
    """
    if family not in ("backward", "forward"):
        raise ValueError("family must be 'backward' or 'forward'")

    def na(reason, **kw):
        base = dict(family=family, orientation=None, t_l=None, t_u=None, A=None, b=None,
                    b_tilde=None, D=None, applicable=False, reason=reason, x_bar=x_bar)
        base.update(kw)
        return BreakingPrediction(**base)

    if not np.isfinite(Q0):
        return na("undefined value")
    if lam <= 0 or E0 <= 0:
        return na("lambda=0 or E0=0")
    A = abs(Q0) / (lam * kappa ** 2 * E0)
    D = holder_constant(kappa, E0)
    sgn = cp * Q0
    if sgn == 0:
        return na("degenerate sign", A=A, D=D)
    orientation = "future" if sgn > 0 else "past"
    if A < 1:
        return na("A<1", A=A, D=D, orientation=orientation)
    fac = 1.0 - 1.0 / (2.0 * A)
    lhs = 12.0 * lam_bar ** 2 * D ** 2 * (1.0 + kappa)
    rhs = fac / kappa * abs(cp) ** 3 * abs(Q0)
    b = fac * abs(sgn) / (4.0 * kappa)
    bt = kappa * abs(sgn) / 4.0
    if orientation == "future":
        tl, tu = 3.0 / (5.0 * bt), 3.0 / b
    else:
        tl, tu = -3.0 / b, -3.0 / (5.0 * bt)
    ok = lhs < rhs
    return BreakingPrediction(family, orientation, tl, tu, A, b, bt, D, ok,
                              "ok" if ok else "cubic condition fails", x_bar, rhs - lhs)


def _point_values(state: EulerianState, x_bar: float):
    g = state.grid
    if not (g[0] <= x_bar <= g[-1]):
        raise ValueError("x_bar outside the grid")
    k = int(np.clip(np.searchsorted(g, x_bar, side="right") - 1, 0, g.size - 2))
    u = 0.5 * (state.u[k] + state.u[k + 1])
    return k, u


def _on_atom(state: EulerianState, x_bar: float) -> bool:
    for m in (state.mu, state.nu):
        if m.atom_pos.size and np.min(np.abs(m.atom_pos - x_bar)) <= 1e-12 * max(1.0, abs(x_bar)):
            return True
    return False


def _predict(state, model, x_bar, family):
    if _on_atom(state, x_bar):
        return predict_from_values(np.nan, 0.0, model.kappa, model.lam, model.lam_bar, 1.0,
                                   family, x_bar).with_reason("atom support")
    k, u = _point_values(state, x_bar)
    Q0 = state.R[k] if family == "backward" else state.S[k]
    cp = float(model.eval(u)[1])
    return predict_from_values(float(Q0), cp, model.kappa, model.lam, model.lam_bar,
                               state.energy(), family, x_bar)


def predict_backward(state: EulerianState, model: WaveSpeedModel, x_bar: float) -> BreakingPrediction:
    """Window for breaking along the backward characteristic through (0, x_bar)."""
    return _predict(state, model, x_bar, "backward")


def predict_forward(state: EulerianState, model: WaveSpeedModel, x_bar: float) -> BreakingPrediction:
    """Window for breaking along the forward characteristic through (0, x_bar)."""
    return _predict(state, model, x_bar, "forward")


def predict_grid(state: EulerianState, model: WaveSpeedModel, points=None) -> list[BreakingPrediction]:
    """Predictions at every cell centre (or the given points), both families."""
    pts = state.cells if points is None else np.asarray(points, dtype=float)
    out = []
    for xb in pts:
        out.append(predict_backward(state, model, float(xb)))
        out.append(predict_forward(state, model, float(xb)))
    return out


# Riccati comparison -----------------------------------------------------------

@dataclass(frozen=True)
class RiccatiCoefficients:
    """h' = alpha(t) + gamma(t) h^2 on ``window`` with h(t0) = h0.

    ``a`` and ``a_tilde`` are the constants of the integral inequality
    a + int gamma h^2 <= h <= a_tilde + int gamma h^2. By default they are
    h0 plus the minimum and maximum over the window of int_{t0}^{t} alpha.
    """

    alpha: Callable[[float], float]
    gamma: Callable[[float], float]
    h0: float
    window: tuple
    a: float | None = None
    a_tilde: float | None = None

    @cached_property
    def _alpha_range(self):
        n = 256
        t0, t1 = self.window
        ts = np.linspace(t0, t1, n + 1)
        parts = [quad(self.alpha, ts[k], ts[k + 1])[0] for k in range(n)]
        I = np.concatenate(([0.0], np.cumsum(parts)))

        def cum(t):
            k = int(np.clip(np.searchsorted(ts, t) - 1, 0, n - 1))
            return I[k] + quad(self.alpha, ts[k], t)[0]

        out = []
        for sgn, k in ((1.0, int(np.argmin(I))), (-1.0, int(np.argmax(I)))):
            best = sgn * I[k]
            lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, n)]
            if hi > lo:
                r = minimize_scalar(lambda t: sgn * cum(t), bounds=(lo, hi), method="bounded",
                                    options={"xatol": 1e-13})
                best = min(best, float(r.fun))
            out.append(sgn * best)
        return out[0], out[1]

    def constants(self):
        if self.a is not None and self.a_tilde is not None:
            return self.a, self.a_tilde
        lo, hi = self._alpha_range
        a = self.h0 + lo if self.a is None else self.a
        at = self.h0 + hi if self.a_tilde is None else self.a_tilde
        return a, at


class BlowUp(ArithmeticError):
    """A bound's denominator reaches zero before the requested time."""


def riccati_envelope(coeffs: RiccatiCoefficients, t: float, Gamma: float | None = None):
    """(lower, upper) = (a / (1 - a G), a~ / (1 - a~ G)), G = int_{t0}^{t} gamma."""
    t0, t1 = coeffs.window
    if not (t0 <= t <= t1):
        raise ValueError("t outside the window")
    a, at = coeffs.constants()
    if not (a <= at < 0):
        raise ValueError("need a <= a_tilde < 0")
    G = quad(coeffs.gamma, t0, t, limit=200)[0] if Gamma is None else Gamma
    dl, du = 1.0 - a * G, 1.0 - at * G
    if dl <= 0 or du <= 0:
        raise BlowUp(f"bound blows up before t={t}")
    return a / dl, at / du


# diagnostics on solved fields -----------------------------------------------------

@dataclass(frozen=True)
class BreakingEvent:
    family: str          # backward: x_xi -> 0 on a xi line; forward: x_eta -> 0 on an eta line
    line: float          # xi (backward) or eta (forward) of the line, physical coordinates
    t: float
    x: float
    min_value: float
    initial: bool        # already broken on the initial curve
    side: str
    line_index: int = -1
    front: float = -1.0

    def to_dict(self):
        return dict(self.__dict__)


def _line_series(side: Side, kind: str):
    """2-D arrays (front, line) of edge data along lines orthogonal to the fronts.

    kind 'bottom': Z_xi edges on xi-columns, line index i, entries for d = 1..
    kind 'right' : Z_eta edges on eta-rows, line index j.
    Returns values (nd, nl, 4), t and x at edge midpoints, and line coordinates.
    """
    nd = side.n_fronts
    K = side.K
    vals = np.full((nd, K + 1, 4), np.nan)
    tt = np.full((nd, K + 1), np.nan)
    xx = np.full((nd, K + 1), np.nan)
    UU = np.full((nd, K + 1), np.nan)
    for d in range(1, nd + 1):
        Zd = side.Z[d]
        n = Zd.shape[0]
        j = np.arange(n)
        if kind == "bottom":
            A = side.bottom[d]
            other = side.Z[d - 1][:n]
            li = j + d
        else:
            A = side.right[d]
            other = side.Z[d - 1][1:n + 1]
            li = j
        vals[d - 1, li] = A
        tt[d - 1, li] = 0.5 * (Zd[:, 0] + other[:, 0])
        xx[d - 1, li] = 0.5 * (Zd[:, 1] + other[:, 1])
        UU[d - 1, li] = 0.5 * (Zd[:, 2] + other[:, 2])
    if kind == "bottom":
        coord = np.concatenate(([np.nan], 0.5 * (side.xi[1:] + side.xi[:-1])))
        seg = np.concatenate(([0.0], side.dxi))
    else:
        coord = np.concatenate((0.5 * (side.eta[1:] + side.eta[:-1]), [np.nan]))
        seg = np.concatenate((side.deta, [0.0]))
    return vals, tt, xx, UU, coord, seg


def _family(side: Side, kind: str) -> str:
    backward = (kind == "bottom") != side.transposed
    return "backward" if backward else "forward"


def _refine_min(y, k):
    """Sub-cell vertex offset of the parabola through y[k-1], y[k], y[k+1]."""
    if k <= 0 or k >= y.size - 1 or np.isnan(y[k - 1]) or np.isnan(y[k + 1]):
        return 0.0
    den = y[k - 1] - 2 * y[k] + y[k + 1]
    if den <= 0:
        return 0.0
    return float(np.clip(0.5 * (y[k - 1] - y[k + 1]) / den, -0.5, 0.5))


def _interp_at(arr, k, off):
    if off == 0.0:
        return float(arr[k])
    k2 = k + (1 if off > 0 else -1)
    if k2 < 0 or k2 >= arr.size or np.isnan(arr[k2]):
        return float(arr[k])
    return float(arr[k] + abs(off) * (arr[k2] - arr[k]))


def detect_breaking(field: LagrangianField, eps_break: float | None = None,
                    j_floor: float = 0.25) -> list[BreakingEvent]:
    """Runs of x_xi < eps (x_eta < eps) with J_xi (J_eta) above ``j_floor`` along grid lines.

    Each run gives one event located at its minimum; runs that start on the
    initial curve are marked ``initial``.
    """
    from .extract import default_eps_break

    eps = default_eps_break(field) if eps_break is None else eps_break
    events = []
    for side, sname in ((field.below, "future"), (field.above, "past")):
        if side.n_fronts < 1:
            continue
        for kind in ("bottom", "right"):
            vals, tt, xx, _, coord, seg = _line_series(side, kind)
            fam = _family(side, kind)
            xv = vals[:, :, 1]
            jv = vals[:, :, 3]
            low = (xv < eps) & (jv > j_floor)
            low[:, seg <= 0] = False
            cols = np.nonzero(low.any(axis=0))[0]
            for li in cols:
                m = low[:, li]
                # run boundaries
                dm = np.diff(np.concatenate(([0], m.astype(int), [0])))
                starts = np.nonzero(dm == 1)[0]
                ends = np.nonzero(dm == -1)[0]
                y = xv[:, li]
                last = int(np.nonzero(~np.isnan(y))[0].max())
                for a, b in zip(starts, ends):
                    k = a + int(np.nanargmin(y[a:b]))
                    if k == last and y[k] > 0 and k > a:
                        continue    # still decreasing where the line leaves the solved region
                    # a run that starts on the curve and is smallest there was broken already
                    initial = bool(a == 0 and y[k] >= y[0])
                    off = _refine_min(y, k)
                    line = coord[li]
                    events.append(BreakingEvent(
                        family=fam, line=float(line), t=_interp_at(tt[:, li], k, off),
                        x=_interp_at(xx[:, li], k, off), min_value=float(y[k]),
                        initial=initial, side=sname, line_index=int(li), front=k + 1 + off))
    events.sort(key=lambda e: (e.family, e.line, e.t))
    return events


@dataclass(frozen=True)
class BreakingSet:
    """Adjacent grid lines that are broken from the initial curve on (an atom strip)."""
    family: str
    side: str
    line_lo: float
    line_hi: float
    n_lines: int

    def to_dict(self):
        return dict(self.__dict__)


def breaking_sets(events: list[BreakingEvent]) -> list[BreakingSet]:
    """Group ``initial`` events into strips of consecutive line indices."""
    out = []
    key = lambda e: (e.family, e.side)
    init = sorted((e for e in events if e.initial), key=lambda e: (key(e), e.line_index))
    run = []
    for e in init + [None]:
        if run and (e is None or key(e) != key(run[-1]) or e.line_index > run[-1].line_index + 1):
            out.append(BreakingSet(run[0].family, run[0].side, run[0].line, run[-1].line, len(run)))
            run = []
        if e is not None and not (run and e.line_index == run[-1].line_index):
            run.append(e)
    return out


def line_minimum(field: LagrangianField, family: str, line: float, orientation: str = "future"):
    """Location of the minimum of x_xi (backward) or x_eta (forward) along the grid line nearest ``line``.

    Returns dict with t, x, min value, the initial value and the line index.
    """
    side = field.below if orientation == "future" else field.above
    kind = "bottom" if (family == "backward") != side.transposed else "right"
    vals, tt, xx, _, coord, seg = _line_series(side, kind)
    ok = np.nonzero(~np.isnan(coord) & (seg > 0))[0]
    li = int(ok[np.argmin(np.abs(coord[ok] - line))])
    y = vals[:, li, 1]
    valid = ~np.isnan(y)
    k = int(np.nanargmin(np.where(valid, y, np.inf)))
    off = _refine_min(y, k)
    last = int(np.nonzero(valid)[0].max())
    return {"t": _interp_at(tt[:, li], k, off), "x": _interp_at(xx[:, li], k, off),
            "min": float(y[k]), "start": float(y[0]), "index": li, "front": k,
            "interior": bool(0 < k < last), "line": float(coord[li])}


@dataclass(frozen=True)
class SignFlipReport:
    family: str
    before: float
    after: float
    flipped: bool
    conclusive: bool
    reason: str = ""

    def to_dict(self):
        return dict(self.__dict__)


def sign_flip_diagnostic(field: LagrangianField, model: WaveSpeedModel, event: BreakingEvent,
                         offset: int = 3) -> SignFlipReport:
    """Signs of R = c U_xi / x_xi (or S = -c U_eta / x_eta) just before and after an event."""
    side = field.below if event.side == "future" else field.above
    kind = "bottom" if (event.family == "backward") != side.transposed else "right"
    vals, tt, xx, UU, coord, seg = _line_series(side, kind)
    li = event.line_index
    k = int(round(event.front - 1))
    v = vals[:, li]
    n = v.shape[0]
    kb, ka = k - offset, k + offset
    if kb < 0 or ka >= n or np.isnan(v[kb]).any() or np.isnan(v[ka]).any():
        return SignFlipReport(event.family, np.nan, np.nan, False, False, "line too short")
    cp = float(model.eval(UU[k, li])[1])
    if abs(cp) < 1e-8:
        return SignFlipReport(event.family, np.nan, np.nan, False, False, "c'(U) vanishes")
    sgn = 1.0 if event.family == "backward" else -1.0
    # physical sign: on the transposed side the stored derivative is the other family
    c_b, c_a = model.eval(UU[kb, li])[0], model.eval(UU[ka, li])[0]
    before = sgn * c_b * v[kb, 2] / v[kb, 1]
    after = sgn * c_a * v[ka, 2] / v[ka, 1]
    if side.direction < 0:
        before, after = after, before
    return SignFlipReport(event.family, float(before), float(after),
                          bool(np.sign(before) == -np.sign(after) and before != 0), True)


@dataclass(frozen=True)
class GradientSeries:
    t: np.ndarray
    value: np.ndarray       # c'(u) u_x along the line
    integral: np.ndarray    # running integral in t from the initial curve

    def tag(self, threshold: float) -> str | None:
        """'up' if the largest |c'(u) u_x| is a large positive value, 'down' if negative.

        Approaching a future breaking point the series grows to +inf; going
        backward in time towards a past one it falls to -inf.
        """
        v = self.value[np.isfinite(self.value)]
        if v.size == 0:
            return None
        peak = v[np.argmax(np.abs(v))]
        if abs(peak) < threshold:
            return None
        return "up" if peak > 0 else "down"


def gradient_diagnostic(field: LagrangianField, model: WaveSpeedModel, family: str, line: float,
                        orientation: str = "future") -> GradientSeries:
    """c'(u) u_x along the grid line nearest ``line`` with u_x = (R - S) / (2c)."""
    side = field.below if orientation == "future" else field.above
    kind = "bottom" if (family == "backward") != side.transposed else "right"
    vals, tt, xx, UU, coord, seg = _line_series(side, kind)
    ok = np.nonzero(~np.isnan(coord) & (seg > 0))[0]
    li = int(ok[np.argmin(np.abs(coord[ok] - line))])
    A = vals[:, li]
    nd = A.shape[0]
    Bv = np.full_like(A, np.nan)
    for d in range(1, nd + 1):
        # cell (d, j) with P = (j + d, j): bottom on column i = j + d, right on row j
        if kind == "bottom":
            j = li - d
            if 0 <= j < side.right[d].shape[0]:
                Bv[d - 1] = side.right[d][j]
        else:
            j = li
            if j < side.bottom[d].shape[0]:
                Bv[d - 1] = side.bottom[d][j]
    if side.transposed:
        Zxi, Zeta = (Bv, A) if kind == "bottom" else (A, Bv)
    else:
        Zxi, Zeta = (A, Bv) if kind == "bottom" else (Bv, A)
    U = UU[:, li]
    c, cp, _ = model.eval(U)
    with np.errstate(divide="ignore", invalid="ignore"):
        ux = 0.5 * (Zxi[:, 2] / Zxi[:, 1] + Zeta[:, 2] / Zeta[:, 1])
    val = cp * ux
    t = tt[:, li]
    good = np.isfinite(t)
    t, val = t[good], val[good]
    integ = np.concatenate(([0.0], np.cumsum(0.5 * (val[1:] + val[:-1]) * np.diff(t))))
    return GradientSeries(t, val, integ)
