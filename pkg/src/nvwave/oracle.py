"""Independent smooth-region solvers for cross-checks.

``rs_step`` advances the R-S system

    R_t - c R_x = c'/(4c) (R^2 - S^2),   S_t + c S_x = c'/(4c) (S^2 - R^2),
    u_t = (R + S) / 2,

with first-order upwinding. ``characteristic_trace`` integrates
y' = -c(u(t, y)) or z' = c(u(t, z)) through a sampled u with Heun's method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import LinearNDInterpolator, RegularGridInterpolator

from .eulerian import EulerianState, from_functions
from .wave_speed import WaveSpeedModel

DEFAULT_CFL = 0.45


class OracleRefused(ValueError):
    """The oracle was asked to run where the R-S system does not apply."""


@dataclass(frozen=True, eq=False)
class SmoothRSState:
    grid: np.ndarray       # uniform nodes
    u: np.ndarray          # on nodes
    R: np.ndarray          # on cells
    S: np.ndarray
    time: float = 0.0
    cfl: float = DEFAULT_CFL

    def __post_init__(self):
        if not (0 < self.cfl < 1):
            raise ValueError("cfl must lie in (0, 1)")
        for name in ("u", "R", "S"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} must be finite")
        dx = np.diff(self.grid)
        if not np.allclose(dx, dx[0], rtol=1e-9, atol=0):
            raise ValueError("oracle grid must be uniform")

    @property
    def dx(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @classmethod
    def from_state(cls, st: EulerianState, cfl: float = DEFAULT_CFL) -> "SmoothRSState":
        if st.mu.atom_pos.size or st.nu.atom_pos.size:
            raise OracleRefused("oracle needs data without atoms")
        return cls(st.grid.copy(), st.u.copy(), st.R.copy(), st.S.copy(), st.time, cfl)

    def to_state(self) -> EulerianState:
        return from_functions(self.grid, self.u, self.R, self.S, time=self.time)

    def to_csv(self) -> str:
        """Same column layout as an extracted slice."""
        return self.to_state().to_csv()


def max_dt(state: SmoothRSState, model: WaveSpeedModel) -> float:
    return state.cfl * state.dx / model.kappa


def rs_step(state: SmoothRSState, model: WaveSpeedModel, dt: float) -> SmoothRSState:
    """One upwind step; constant extrapolation at both ends."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if dt > max_dt(state, model) * (1 + 1e-12):
        raise ValueError(f"CFL violated: dt={dt} > {max_dt(state, model)}")
    dx = state.dx
    R, S, u = state.R, state.S, state.u
    um = 0.5 * (u[1:] + u[:-1])
    c, cp, _ = model.eval(um)
    src = cp / (4.0 * c) * (R * R - S * S)
    Rr = np.append(R[1:], R[-1])
    Sl = np.insert(S[:-1], 0, S[0])
    Rn = R + dt * (c * (Rr - R) / dx + src)
    Sn = S - dt * (c * (S - Sl) / dx + src)
    ut_cell = 0.5 * (R + S)
    ut_node = np.empty(u.size)
    ut_node[1:-1] = 0.5 * (ut_cell[1:] + ut_cell[:-1])
    ut_node[0] = ut_cell[0]
    ut_node[-1] = ut_cell[-1]
    return SmoothRSState(state.grid, u + dt * ut_node, Rn, Sn, state.time + dt, state.cfl)


def rs_run(state: SmoothRSState, model: WaveSpeedModel, T: float, t_limit: float | None = None,
           history_every: int = 0):
    """Advance to time T (forward or backward); refuses to pass ``t_limit``.

    Returns the final state and, if ``history_every`` > 0, a list of every
    n-th state (including the first and last).
    """
    if t_limit is not None and abs(T) > abs(t_limit):
        raise OracleRefused(f"T={T} lies beyond the earliest predicted breaking time {t_limit}")
    if T < 0:
        # time reversal: (t, R, S) -> (-t, -S, -R) keeps the system invariant
        rev = SmoothRSState(state.grid, state.u, -state.S, -state.R, -state.time, state.cfl)
        out, hist = rs_run(rev, model, -T, None, history_every)
        flip = lambda s: SmoothRSState(s.grid, s.u, -s.S, -s.R, -s.time, s.cfl)
        return flip(out), [flip(s) for s in hist]
    dtm = max_dt(state, model)
    n = max(1, int(math.ceil((T - state.time) / dtm - 1e-12)))
    dt = (T - state.time) / n
    hist = [state] if history_every else []
    s = state
    for k in range(n):
        s = rs_step(s, model, dt)
        if k == n - 1:
            s = SmoothRSState(s.grid, s.u, s.R, s.S, float(T), s.cfl)   # no accumulated drift
        if history_every and ((k + 1) % history_every == 0 or k == n - 1):
            hist.append(s)
    return s, hist


def earliest_window_start(state: EulerianState, model: WaveSpeedModel) -> float | None:
    """Smallest |t_l| over all applicable predictions, or None."""
    from .breaking import predict_grid

    tl = [abs(p.t_l) for p in predict_grid(state, model) if p.applicable]
    return min(tl) if tl else None


# characteristics --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CharacteristicPath:
    t: np.ndarray
    x: np.ndarray
    family: str
    truncated: bool


def field_sampler(field):
    """u(t, x) by linear interpolation over the solved nodes."""
    _, _, Z = field.nodes()
    pts = Z[:, :2]
    key = np.unique(np.round(pts, 14), axis=0, return_index=True)[1]
    interp = LinearNDInterpolator(pts[key], Z[key, 2])
    return lambda t, x: interp(np.column_stack([np.atleast_1d(t), np.atleast_1d(x)]))


def history_sampler(history):
    """u(t, x) from a list of oracle states on a common grid."""
    times = np.array([s.time for s in history])
    order = np.argsort(times)
    U = np.array([history[k].u for k in order])
    interp = RegularGridInterpolator((times[order], history[0].grid), U, bounds_error=False,
                                     fill_value=np.nan)
    return lambda t, x: interp(np.column_stack([np.atleast_1d(t), np.atleast_1d(x)]))


def characteristic_trace(u_of, model: WaveSpeedModel, start, family: str, t_end: float,
                         n_steps: int = 200) -> CharacteristicPath:
    """Heun integration of y' = -c(u) (backward) or z' = +c(u) (forward)."""
    if family not in ("backward", "forward"):
        raise ValueError("family must be 'backward' or 'forward'")
    sgn = -1.0 if family == "backward" else 1.0
    t0, x0 = float(start[0]), float(start[1])
    ts = np.linspace(t0, t_end, n_steps + 1)
    xs = [x0]
    truncated = False

    def vel(t, x):
        u = float(np.asarray(u_of(t, x)).ravel()[0])
        return sgn * float(model.eval(u)[0]) if np.isfinite(u) else np.nan

    for k in range(n_steps):
        dt = ts[k + 1] - ts[k]
        x = xs[-1]
        k1 = vel(ts[k], x)
        k2 = vel(ts[k + 1], x + dt * k1) if np.isfinite(k1) else np.nan
        if not (np.isfinite(k1) and np.isfinite(k2)):
            truncated = True
            break
        xs.append(x + 0.5 * dt * (k1 + k2))
    return CharacteristicPath(ts[:len(xs)], np.array(xs), family, truncated)


# cross-solver comparison ------------------------------------------------------

@dataclass(frozen=True)
class DiffReport:
    T: float
    l1_u: float
    l1_R: float
    l1_S: float
    dx: float

    @property
    def total(self) -> float:
        return self.l1_u + self.l1_R + self.l1_S

    def to_dict(self):
        d = dict(self.__dict__)
        d["total"] = self.total
        return d


def _cumulative(nodes, vals):
    w = np.diff(nodes)
    return np.concatenate(([0.0], np.cumsum(np.nan_to_num(vals) * w)))


def _averages(nodes, vals, edges):
    """Averages of a piecewise-constant function over [edges[k], edges[k+1]]."""
    C = np.interp(edges, nodes, _cumulative(nodes, vals))
    return np.diff(C) / np.diff(edges)


def slice_diff(lagr, orc: SmoothRSState, window=None, h: float | None = None) -> DiffReport:
    """L1 differences between a Lagrangian slice and an oracle state.

    u is compared at the oracle nodes. R and S are cell data on both sides,
    so they are compared through their averages over a uniform comparison
    grid of step ``h`` (default: twice the median slice cell width).
    Restricted to ``window`` = (a, b) when given. ``lagr`` is an
    EulerianState or a TimeSlice.
    """
    lagr = getattr(lagr, "state", lagr)
    lo, hi = float(lagr.grid[0]), float(lagr.grid[-1])
    lo, hi = max(lo, float(orc.grid[0])), min(hi, float(orc.grid[-1]))
    if window is not None:
        lo, hi = max(lo, window[0]), min(hi, window[1])
    if not hi > lo:
        raise ValueError("empty comparison window")
    g = orc.grid
    node_in = (g >= lo) & (g <= hi)
    u_l = np.interp(g, lagr.grid, lagr.u)
    l1u = float(np.sum(np.abs(u_l - orc.u)[node_in]) * orc.dx)
    if h is None:
        h = 2.0 * float(np.median(np.diff(lagr.grid)))
    n = max(1, int(round((hi - lo) / h)))
    edges = np.linspace(lo, hi, n + 1)
    H = (hi - lo) / n
    l1 = []
    for a, b in ((lagr.R, orc.R), (lagr.S, orc.S)):
        d = _averages(lagr.grid, a, edges) - _averages(g, b, edges)
        l1.append(float(np.sum(np.abs(d)) * H))
    return DiffReport(orc.time, l1u, l1[0], l1[1], H)
