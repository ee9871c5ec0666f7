"""Initial data for the worked examples and their expected-outcome checkers.

* ``linear``: a smooth bump with c = 1.
* ``hut``: the cusped traveling wave u = w(x - s t) with c = sqrt(s^2 + sin u).
* ``dirac_box``: constant state gamma around atoms a delta_0, b delta_0, with
  c'(gamma) = 0, optionally flanked by bands with |S| = 2.
* ``spike``: a narrow R (or S) spike on a constant background, built so that
  the breaking-window hypotheses hold at its centre.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import wave_speed as ws
from .eulerian import EulerianState, from_functions, smooth_state
from .measures import RadonMeasure
from .wave_speed import WaveSpeedModel

# Gauss-Legendre rule used for exact-to-rounding cell integrals
_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _gl(f, a, b):
    """Vectorized Gauss-Legendre integral of f over [a, b] (arrays a, b)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = mid[..., None] + half[..., None] * _GL_X
    return half * np.sum(_GL_W * f(x), axis=-1)


# linear ---------------------------------------------------------------------

@dataclass(frozen=True)
class LinearParams:
    width: float = 0.5
    amplitude: float = 1.0
    half_domain: float = 4.0
    dx: float = 1.0 / 256

    def profile(self, x):
        return self.amplitude * np.exp(-(np.asarray(x) / self.width) ** 2)


def linear_initial(p: LinearParams = LinearParams(), model: WaveSpeedModel | None = None):
    model = model or ws.constant(1.0)
    n = int(round(2 * p.half_domain / p.dx))
    grid = np.linspace(-p.half_domain, p.half_domain, n + 1)
    return smooth_state(grid, p.profile, lambda x: 0.0 * x, model), model


def dalembert(p: LinearParams, T: float, x, c: float = 1.0):
    x = np.asarray(x, dtype=float)
    return 0.5 * (p.profile(x - c * T) + p.profile(x + c * T))


@dataclass(frozen=True)
class LinearReport:
    times: tuple
    rel_errors: tuple        # max |u - u_exact| / max |u_exact| at each time
    tol: float

    @property
    def max_error(self) -> float:
        return max(self.rel_errors) if self.rel_errors else float("nan")

    @property
    def ok(self) -> bool:
        return bool(self.rel_errors) and self.max_error <= self.tol

    def to_dict(self):
        return {"times": list(self.times), "rel_errors": list(self.rel_errors), "tol": self.tol,
                "max_error": self.max_error, "ok": self.ok}


def check_linear(field, p: LinearParams, times, tol: float = 1e-3) -> LinearReport:
    """Slices against d'Alembert's formula, u = (f(x - t) + f(x + t)) / 2."""
    from .extract import extract

    model = ws.constant(1.0)
    errs = []
    for T in times:
        st = extract(field, model, float(T)).state
        ex = dalembert(p, float(T), st.grid)
        errs.append(float(np.max(np.abs(st.u - ex)) / np.max(np.abs(ex))))
    return LinearReport(tuple(float(t) for t in times), tuple(errs), tol)


# hut ------------------------------------------------------------------------

@dataclass(frozen=True)
class HutParams:
    s: float = 1.5
    k_bar: float = 1.0
    dx: float = 1.0 / 128
    margin: float = 0.5     # constant state on each side of the support

    def __post_init__(self):
        if not self.s > 1:
            raise ValueError("hut needs s > 1")
        if not self.k_bar > 0:
            raise ValueError("hut needs k_bar > 0")
        if not self.dx > 0:
            raise ValueError("dx must be positive")

    @property
    def alpha(self) -> float:
        return _G_PI / (2.0 * self.k_bar)

    def model(self) -> WaveSpeedModel:
        return ws.hut(self.s)


def _w_of_theta(th):
    return 0.5 * np.pi * (1.0 - np.cos(th))


def _g_integrand(th):
    # d/dtheta of G(w(theta)), G(w) = int_0^w sqrt(sin v) dv; smooth in theta
    w = _w_of_theta(th)
    return np.sqrt(np.maximum(np.sin(w), 0.0)) * 0.5 * np.pi * np.sin(th)


_TH = np.linspace(0.0, np.pi, 4097)
_G_TAB = np.concatenate(([0.0], np.cumsum(_gl(_g_integrand, _TH[:-1], _TH[1:]))))
_G_PI = float(_G_TAB[-1])


def _G_theta(th):
    th = np.asarray(th, dtype=float)
    k = np.clip(np.searchsorted(_TH, th, side="right") - 1, 0, _TH.size - 2)
    return _G_TAB[k] + _gl(_g_integrand, _TH[k], th)


def _theta_of_G(g):
    """Invert G(w(theta)) = g on [0, G(pi)] by interpolation plus Newton."""
    g = np.clip(np.asarray(g, dtype=float), 0.0, _G_PI)
    th = np.interp(g, _G_TAB, _TH)
    for _ in range(30):
        r = _G_theta(th) - g
        d = _g_integrand(th)
        step = np.where(d > 1e-300, r / np.where(d > 1e-300, d, 1.0), 0.0)
        th = np.clip(th - step, 0.0, np.pi)
        if np.max(np.abs(step), initial=0.0) < 1e-15:
            break
    return th


def _zeta_to_theta(p: HutParams, zeta):
    """theta coordinate of w(zeta) and the branch (+1 rising, -1 falling, 0 outside)."""
    z = np.asarray(zeta, dtype=float)
    a2 = 2.0 * p.alpha
    g = np.where(z < 0, (z + a2), (a2 - z)) * p.k_bar
    branch = np.where((z > -a2) & (z < 0), 1, np.where((z >= 0) & (z < a2), -1, 0))
    th = np.where(branch == 0, 0.0, _theta_of_G(np.clip(g, 0.0, _G_PI)))
    th = np.where(z == 0, np.pi, th)
    return th, branch


def hut_profile(p: HutParams, zeta):
    """w(zeta): 0 outside (-2 alpha, 2 alpha), pi at 0, w' = +-k_bar / sqrt(sin w)."""
    th, _ = _zeta_to_theta(p, zeta)
    return _w_of_theta(th)


def hut_slope(p: HutParams, zeta):
    w = hut_profile(p, zeta)
    _, br = _zeta_to_theta(p, zeta)
    with np.errstate(divide="ignore"):
        return np.where(br == 0, 0.0, br * p.k_bar / np.sqrt(np.sin(w)))


def hut_R_S(p: HutParams, zeta):
    """Pointwise R, S of the traveling wave at t = 0 (S is infinite at the gluing points)."""
    w = hut_profile(p, zeta)
    _, br = _zeta_to_theta(p, zeta)
    c = np.sqrt(p.s ** 2 + np.sin(w))
    with np.errstate(divide="ignore", invalid="ignore"):
        R = np.where(br == 0, 0.0, br * p.k_bar * np.sqrt((c - p.s) / (c + p.s)))
        S = np.where(br == 0, 0.0, -br * p.k_bar * np.sqrt((c + p.s) / (c - p.s)))
    return R, S


def _hut_cell_integrals(p: HutParams, x0, x1):
    """Exact integrals of R^2 and S^2 over [x0, x1] and the sign of the dominant branch."""
    a2 = 2.0 * p.alpha
    IR = np.zeros(x0.size)
    IS = np.zeros(x0.size)
    signed = np.zeros(x0.size)
    s = p.s

    def f_S(th):
        w = _w_of_theta(th)
        c = np.sqrt(s * s + np.sin(w))
        # (c + s)^2 / sqrt(sin w) * dw/dtheta, regular at both ends
        sw = np.sin(w)
        ratio = np.where(sw > 0, np.sin(th) / np.sqrt(np.where(sw > 0, sw, 1.0)), 2.0 / np.sqrt(np.pi))
        return (c + s) ** 2 * ratio * 0.5 * np.pi

    def f_R(th):
        w = _w_of_theta(th)
        c = np.sqrt(s * s + np.sin(w))
        sw = np.maximum(np.sin(w), 0.0)
        return sw ** 1.5 / (c + s) ** 2 * 0.5 * np.pi * np.sin(th)

    for lo, hi, br in ((-a2, 0.0, 1), (0.0, a2, -1)):
        a = np.clip(x0, lo, hi)
        b = np.clip(x1, lo, hi)
        live = b > a
        if not np.any(live):
            continue
        ta, _ = _zeta_to_theta(p, a[live] if br == 1 else b[live])
        tb, _ = _zeta_to_theta(p, b[live] if br == 1 else a[live])
        if br == 1:
            ta = np.where(a[live] <= -a2, 0.0, ta)
            tb = np.where(b[live] >= 0.0, np.pi, tb)
        else:
            ta = np.where(b[live] >= a2, 0.0, ta)
            tb = np.where(a[live] <= 0.0, np.pi, tb)
        # both integrals are over w increasing; dx = sqrt(sin w) / k_bar dw
        iS = p.k_bar * _gl(f_S, ta, tb)
        iR = p.k_bar * _gl(f_R, ta, tb)
        IS[live] += iS
        IR[live] += iR
        signed[live] += br * iS
    return IR, IS, np.sign(signed)


def hut_initial(p: HutParams = HutParams()) -> tuple[EulerianState, WaveSpeedModel]:
    """Hut data on a uniform grid; cell R, S carry the exact cell averages of R^2, S^2."""
    model = p.model()
    a2 = 2.0 * p.alpha
    L = a2 + p.margin
    n = int(math.ceil(2 * L / p.dx))
    grid = np.linspace(-L, L, n + 1)
    u = hut_profile(p, grid)
    IR, IS, sg = _hut_cell_integrals(p, grid[:-1], grid[1:])
    dx = np.diff(grid)
    R = sg * np.sqrt(IR / dx)      # R has the branch sign, S the opposite one
    S = -sg * np.sqrt(IS / dx)
    mu = RadonMeasure.with_atoms(grid, 0.25 * IR)
    nu = RadonMeasure.with_atoms(grid, 0.25 * IS)
    return EulerianState(grid, u, R, S, mu, nu, 0.0), model


def hut_traveling_S(p: HutParams, t: float, x):
    """S of the traveling wave u = w(x - s t) at time t."""
    return hut_R_S(p, np.asarray(x, dtype=float) - p.s * t)[1]


def hut_max_R(p: HutParams) -> float:
    c = math.sqrt(p.s ** 2 + 1.0)
    return p.k_bar * math.sqrt((c - p.s) / (c + p.s))


def hut_weak_residual(p: HutParams, h: float, center=None, radius=None) -> float:
    """Weak-form residual of the traveling wave against a smooth bump test function.

    Integrates u_t phi_t - c(u) u_x (c(u) phi)_x over a square of side 2 * radius
    placed inside (alpha/2, 3 alpha/2) where w is smooth; derivatives of u are
    centred differences of the exact profile, so the residual is O(h^2).
    """
    model = p.model()
    if center is None:
        center = (0.0, p.alpha)
    if radius is None:
        radius = 0.25 * p.alpha
    t0, x0 = center
    n = int(round(2 * radius / h))
    tt = t0 - radius + (np.arange(n) + 0.5) * h
    xx = x0 - radius + (np.arange(n) + 0.5) * h
    T, X = np.meshgrid(tt, xx, indexing="ij")

    def u(t, x):
        return hut_profile(p, x - p.s * t)

    def bump(r):
        r = np.asarray(r)
        out = np.zeros_like(r)
        m = np.abs(r) < 1
        out[m] = np.exp(-1.0 / (1.0 - r[m] ** 2))
        return out

    def dbump(r):
        r = np.asarray(r)
        out = np.zeros_like(r)
        m = np.abs(r) < 1
        out[m] = bump(r[m]) * (-2.0 * r[m] / (1.0 - r[m] ** 2) ** 2)
        return out

    rt = (T - t0) / radius
    rx = (X - x0) / radius
    phi = bump(rt) * bump(rx)
    phi_t = dbump(rt) * bump(rx) / radius
    phi_x = bump(rt) * dbump(rx) / radius
    U = u(T, X)
    ut = (u(T + h, X) - u(T - h, X)) / (2 * h)
    ux = (u(T, X + h) - u(T, X - h)) / (2 * h)
    c, cp, _ = model.eval(U)
    integrand = ut * phi_t - c * ux * (cp * ux * phi + c * phi_x)
    return float(abs(np.sum(integrand) * h * h))


@dataclass(frozen=True)
class HutReport:
    t_bar: float | None
    interval: tuple | None
    cells: int
    min_S_bar: float | None
    events: int
    conclusive: bool
    reason: str
    runs: tuple = ()        # all witness intervals at t_bar

    @property
    def ok(self) -> bool:
        return self.conclusive and self.cells > 0

    def to_dict(self):
        d = asdict(self)
        d["ok"] = self.ok
        return d


def check_hut_nonconservative(field, p: HutParams, times=None, neg_tol: float = 1e-6) -> HutReport:
    """Search slices of the solved field for S_bar < 0 where the traveling-wave S >= 0.

    The search runs over the given times (default: 40 times spread over the
    solved future range) and keeps the time with the widest witness interval
    to the right of x = s t. S_bar counts as negative below -neg_tol * max|S_bar|.
    """
    from .breaking import detect_breaking
    from .extract import extract

    model = p.model()
    events = [e for e in detect_breaking(field) if e.side == "future" and not e.initial]
    if not events:
        return HutReport(None, None, 0, None, 0, False, "no breaking detected")
    _, tmax = field.slice_range()
    if times is None:
        times = np.linspace(0.0, tmax, 41)[1:]
    best = None
    for t in times:
        try:
            sl = extract(field, model, float(t))
        except ValueError:
            continue
        st = sl.state
        xc = st.cells
        S_tw = hut_traveling_S(p, t, xc)
        thr = neg_tol * max(1.0, float(np.nanmax(np.abs(st.S))))
        ok = np.isfinite(st.S) & (st.S < -thr) & (S_tw >= 0) & (xc > p.s * t) & (st.dx > 0)
        if not np.any(ok):
            continue
        idx = np.nonzero(ok)[0]
        runs = np.split(idx, np.nonzero(np.diff(idx) > 1)[0] + 1)
        run = max(runs, key=lambda r: st.grid[r[-1] + 1] - st.grid[r[0]])
        width = st.grid[run[-1] + 1] - st.grid[run[0]]
        if best is None or width > best[0]:
            best = (width, float(t), (float(st.grid[run[0]]), float(st.grid[run[-1] + 1])),
                    int(run.size), float(np.min(st.S[run])),
                    tuple((float(st.grid[r[0]]), float(st.grid[r[-1] + 1])) for r in runs))
    if best is None:
        return HutReport(None, None, 0, None, len(events), True, "no witness interval")
    return HutReport(best[1], best[2], best[3], best[4], len(events), True, "ok", best[5])


# Dirac box ------------------------------------------------------------------

@dataclass(frozen=True)
class DiracBoxParams:
    alpha: float = 0.5
    beta: float = 1.0
    gamma_state: float = 0.0
    a: float = 0.25
    b: float = 0.25
    dx: float = 1.0 / 128
    eps: float = 0.5        # bump depth of the wave speed well
    k: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.beta > self.alpha:
            raise ValueError("need beta > alpha")
        if self.a < 0 or self.b < 0:
            raise ValueError("atom masses must be >= 0")
        if not self.dx > 0:
            raise ValueError("dx must be positive")

    def model(self) -> WaveSpeedModel:
        """Cosine well with c(gamma) = 1 and c'(gamma) = 0."""
        return ws.bump(1.0, self.eps, self.k, self.gamma_state)


def _check_box_model(model: WaveSpeedModel, gamma: float):
    c, cp, _ = model.eval(gamma)
    if abs(cp) > 1e-12:
        raise ValueError("model needs c'(gamma) = 0")
    return float(c)


def dirac_box_initial(p: DiracBoxParams = DiracBoxParams(), variant: str = "plain",
                      model: WaveSpeedModel | None = None):
    """Constant state gamma on [-alpha, alpha] with atoms a delta_0 and b delta_0.

    The flanked variant adds bands [-beta, -alpha) and (alpha, beta] with
    R = 0 and S = 2 (left), S = -2 (right), so c(u) u_x = -+1 and u rises
    away from the box; outside [-beta, beta] u stays at its band end value.
    """
    if variant not in ("plain", "flanked"):
        raise ValueError("variant must be 'plain' or 'flanked'")
    model = model or p.model()
    _check_box_model(model, p.gamma_state)
    n_in = int(round(p.alpha / p.dx))
    inner = np.linspace(-p.alpha, p.alpha, 2 * n_in + 1)
    if variant == "plain":
        grid = inner
        u = np.full(grid.size, p.gamma_state)
        R = np.zeros(grid.size - 1)
        S = np.zeros(grid.size - 1)
    else:
        n_b = int(round((p.beta - p.alpha) / p.dx))
        band = np.linspace(p.alpha, p.beta, n_b + 1)[1:]
        grid = np.concatenate((-band[::-1], inner, band))
        # right band: du/dx = 1 / c(u) from u(alpha) = gamma
        sol = solve_ivp(lambda x, y: 1.0 / model.eval(y)[0], (p.alpha, p.beta), [p.gamma_state],
                        rtol=1e-12, atol=1e-14, dense_output=True)
        ub = sol.sol(band)[0]
        u = np.concatenate((ub[::-1], np.full(inner.size, p.gamma_state), ub))
        xc = 0.5 * (grid[1:] + grid[:-1])
        R = np.zeros(xc.size)
        S = np.where(xc < -p.alpha, 2.0, np.where(xc > p.alpha, -2.0, 0.0))
    st = from_functions(grid, u, R, S, mu_atoms=[(0.0, p.a)] if p.a > 0 else (),
                        nu_atoms=[(0.0, p.b)] if p.b > 0 else ())
    return st, model


@dataclass(frozen=True)
class BoxReport:
    variant: str
    max_U_dev: float
    mu_atom_error: float | None
    nu_atom_error: float | None
    mu_mass_error: float | None
    nu_mass_error: float | None
    cell: float
    spread_ok: bool | None
    spread_times: tuple = ()
    atoms_before: int | None = None
    plateau_atoms: int | None = None   # Eulerian atoms seen at the spread times (resolution limited)

    @property
    def ok(self) -> bool:
        if self.variant == "plain":
            return (self.max_U_dev <= 1e-10 and self.mu_atom_error is not None
                    and self.mu_atom_error <= self.cell and self.nu_atom_error <= self.cell
                    and self.mu_mass_error <= 1e-8 and self.nu_mass_error <= 1e-8)
        return bool(self.spread_ok) and bool(self.atoms_before)

    def to_dict(self):
        d = asdict(self)
        d["ok"] = self.ok
        return d


def _atom_near(m: RadonMeasure, x, window):
    if m.atom_pos.size == 0:
        return None, None
    k = int(np.argmin(np.abs(m.atom_pos - x)))
    if abs(m.atom_pos[k] - x) > window:
        return None, None
    return float(m.atom_pos[k]), float(m.atom_mass[k])


def check_linear_box(field, p: DiracBoxParams, variant: str = "plain", model=None,
                     t_check: float | None = None, n_spread: int = 5) -> BoxReport:
    """Checks U = gamma on the box and atom transport (plain) or immediate spreading (flanked)."""
    from .extract import extract

    model = model or p.model()
    c0 = _check_box_model(model, p.gamma_state)
    xi, eta, Z = field.nodes()
    inner = _box_mask(field, p)
    dev = float(np.max(np.abs(Z[inner, 2] - p.gamma_state))) if np.any(inner) else float("nan")
    if variant == "plain":
        t = p.alpha / (4 * c0) if t_check is None else t_check
        errs = []
        for T in (t, -t):
            sl = extract(field, model, T)
            st = sl.state
            cell = float(np.max(st.dx))
            pm, am = _atom_near(st.mu, -c0 * T, p.alpha)
            pn, an = _atom_near(st.nu, c0 * T, p.alpha)
            errs.append((
                abs(pm + c0 * T) if pm is not None else np.inf,
                abs(pn - c0 * T) if pn is not None else np.inf,
                abs(am - p.a) if am is not None else (0.0 if p.a == 0 else np.inf),
                abs(an - p.b) if an is not None else (0.0 if p.b == 0 else np.inf),
                cell))
        e = np.max(np.array(errs), axis=0)
        if p.a == 0:
            e[0] = 0.0
        if p.b == 0:
            e[1] = 0.0
        return BoxReport(variant, dev, float(e[0]), float(e[1]), float(e[2]), float(e[3]),
                         float(e[4]), None)
    # flanked: the mu atom meets the left band at t = alpha / 2. An atom of mu
    # is a set of pieces carrying J_xi > 0 with x_xi = 0 exactly.
    eps_t = p.alpha / 8
    times = tuple(float(v) for v in p.alpha / 2 + eps_t * np.linspace(0.2, 1.0, n_spread))
    spread = True
    plateau_atoms = 0
    for T in times:
        sl = extract(field, model, T)
        xs = sl.piece_x()
        win = (xs >= -1.5 * T) & (xs <= 0.0)
        if np.any(sl.atom_pieces("mu") & win):
            spread = False
        st = sl.state
        inwin = (st.mu.atom_pos >= -1.5 * T) & (st.mu.atom_pos <= 0.0)
        plateau_atoms += int(np.sum(inwin))
    sl0 = extract(field, model, 0.4 * p.alpha)
    before = int(np.any(sl0.atom_pieces("mu")))
    return BoxReport(variant, dev, None, None, None, None, p.dx, spread, times, before, plateau_atoms)


def _box_mask(field, p: DiracBoxParams):
    """Nodes whose (t, x) lie in M = {|x| <= alpha - c(gamma) |t|}, with a small inset."""
    xi, eta, Z = field.nodes()
    c0 = 1.0
    tol = 1e-9
    return np.abs(Z[:, 1]) <= p.alpha - c0 * np.abs(Z[:, 0]) - tol


# spike data for the breaking windows --------------------------------------------

@dataclass(frozen=True)
class SpikeParams:
    """Gaussian spike Q_p exp(-(x/w)^2) in R (backward) or S (forward).

    ``sign`` sets the sign of the spike relative to c'(u0); +1 yields future
    breaking, -1 past breaking. The background u0 sits where c' is maximal.
    """

    peak: float = 1000.0
    width: float = 1e-7
    family: str = "backward"
    sign: int = 1
    eps: float = 0.1
    k: float = 1.0
    half_domain: float | None = None     # default scales with the expected breaking time
    dx: float = 1.0 / 512
    fine_cells: int = 200

    def __post_init__(self):
        if self.family not in ("backward", "forward"):
            raise ValueError("family must be 'backward' or 'forward'")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if not (self.peak > 0 and self.width > 0):
            raise ValueError("peak and width must be positive")

    def model(self) -> WaveSpeedModel:
        return ws.bump(1.0, self.eps, self.k, 0.0)

    @property
    def t_estimate(self) -> float:
        """Blow-up time 4c / (c' Q_p) of the Riccati equation along the spike centre."""
        return 4.0 * (1.0 + self.eps) / (self.eps * self.k * self.peak)

    @property
    def domain(self) -> float:
        if self.half_domain is not None:
            return self.half_domain
        return 3.0 * (1.0 + 2.0 * self.eps) * self.t_estimate + 0.02


def spike_initial(p: SpikeParams = SpikeParams()):
    """Spike data; the grid is uniform with a fine patch of ``fine_cells`` cells over +-6 w."""
    model = p.model()
    u_base = 0.5 * np.pi / p.k      # c' = eps k, its maximum
    L = p.domain
    coarse = np.arange(-L, L + 0.5 * p.dx, p.dx)
    fw = 6.0 * p.width
    fine = np.linspace(-fw, fw, p.fine_cells + 1)
    grid = np.union1d(coarse[(coarse < -fw - 0.5 * p.dx) | (coarse > fw + 0.5 * p.dx)], fine)
    xc = 0.5 * (grid[1:] + grid[:-1])
    dx = np.diff(grid)
    # exact cell averages of the Gaussian square
    from scipy.special import erf
    r = np.sqrt(2.0) / p.width

    def sq_int(a, b):
        return p.peak ** 2 * p.width * math.sqrt(math.pi / 8) * (erf(r * b) - erf(r * a))

    Q = p.sign * np.sqrt(sq_int(grid[:-1], grid[1:]) / dx)
    # cell values are signed RMS values, so Q^2/4 is the exact density
    zero = np.zeros_like(Q)
    if p.family == "backward":
        R, S = Q, zero
    else:
        R, S = zero, Q
    # u_x = (R - S) / (2 c(u)) integrated cell by cell
    u = np.empty(grid.size)
    u[0] = u_base
    for i in range(xc.size):
        c = model.eval(u[i])[0]
        du = (R[i] - S[i]) / (2 * c) * dx[i]
        c2 = model.eval(u[i] + du)[0]
        u[i + 1] = u[i] + (R[i] - S[i]) * dx[i] / (c + c2)
    return from_functions(grid, u, R, S), model


def spike_center_value(state: EulerianState, family: str):
    k = int(np.argmin(np.abs(state.cells)))
    return k, float(state.cells[k])


@dataclass(frozen=True)
class SpikeReport:
    family: str
    orientation: str
    t_break: float           # solver-detected breaking time on the designated line
    x_break: float
    window: tuple            # (t_l, t_u) of the prediction at the spike centre
    applicable: bool
    events_on_line: int
    sign_flip: bool
    tolerance: float         # one grid cell in time

    @property
    def contained(self) -> bool:
        lo, hi = self.window
        return (self.applicable and self.events_on_line >= 1
                and lo - self.tolerance <= self.t_break <= hi + self.tolerance)

    @property
    def ok(self) -> bool:
        return self.contained

    def to_dict(self):
        d = asdict(self)
        d["window"] = list(self.window)
        d["contained"] = self.contained
        return d


def check_spike(p: SpikeParams = SpikeParams(), h: float | None = None) -> SpikeReport:
    """Full pipeline on spike data: predict at the centre, solve, find breaking on the centre line."""
    from .breaking import (detect_breaking, line_minimum, predict_backward, predict_forward,
                           sign_flip_diagnostic)
    from .goursat import SolverConfig, solve
    from .lagrangian_init import build_curve

    h = p.dx if h is None else h
    st, m = spike_initial(p)
    k, xb = spike_center_value(st, p.family)
    pred = (predict_backward if p.family == "backward" else predict_forward)(st, m, xb)
    orient = pred.orientation or ("future" if p.sign > 0 else "past")
    tlim = 1.2 * max(abs(pred.t_u), abs(pred.t_l)) if pred.applicable else 3.0 * p.t_estimate
    cv = build_curve(st, m, h=h)
    cfg = SolverConfig(h=h, t_max=tlim if orient == "future" else 0.0,
                       t_min=-tlim if orient == "past" else 0.0)
    fld = solve(cv, m, cfg)
    # the designated characteristic: middle of the xi (eta) range mapped to the centre cell
    sel = np.abs(cv.xbar - xb) <= 0.5 * float(np.diff(st.grid)[k])
    coord = cv.Xbar if p.family == "backward" else cv.Ybar
    line = 0.5 * (coord[sel].min() + coord[sel].max())
    lm = line_minimum(fld, p.family, line, orient)
    on = [e for e in detect_breaking(fld) if not e.initial and e.family == p.family
          and e.side == orient and e.line_index == lm["index"]]
    flip = bool(on) and sign_flip_diagnostic(fld, m, on[0]).flipped
    t_b = on[0].t if on else float("nan")
    x_b = on[0].x if on else float("nan")
    window = (float(pred.t_l), float(pred.t_u)) if pred.applicable else (float("nan"), float("nan"))
    return SpikeReport(p.family, orient, float(t_b), float(x_b), window, bool(pred.applicable),
                       len(on), flip, 0.5 * h)   # t_xi = 1/(2c) <= 1/2 since c >= 1


SCENARIOS = ("linear", "hut", "dirac_box", "flanked_box", "spike")


def build(name: str, params: dict | None = None):
    """(state, model, params object) for a scenario name and a parameter dict."""
    params = dict(params or {})
    if name == "linear":
        p = LinearParams(**params)
        st, m = linear_initial(p)
    elif name == "hut":
        p = HutParams(**params)
        st, m = hut_initial(p)
    elif name in ("dirac_box", "flanked_box"):
        variant = params.pop("variant", "flanked" if name == "flanked_box" else "plain")
        p = DiracBoxParams(**params)
        st, m = dirac_box_initial(p, variant)
    elif name == "spike":
        p = SpikeParams(**params)
        st, m = spike_initial(p)
    else:
        raise ValueError(f"unknown scenario {name!r}")
    return st, m, p
