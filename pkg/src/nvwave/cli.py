"""Command line entry point.

    nvwave defaults
    nvwave simulate    --config run.toml --out out/ --format json
    nvwave predict     --scenario spike
    nvwave slice       --times 0,0.5,1
    nvwave check       --scenario dirac_box
    nvwave oracle-diff --grid-step 0.03125 --times 0.3

Exit codes: 0 pass, 1 check failure, 2 solver failure, 3 invalid config.
Payload files never contain timestamps; timings go to run_meta.json.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import scenarios as sc
from .breaking import BlowUp, breaking_sets, detect_breaking, predict_grid
from .extract import OutOfRange, extract
from .goursat import SolverConfig, StepFailure, solve
from .lagrangian_init import build_curve
from .oracle import OracleRefused, SmoothRSState, earliest_window_start, rs_run, slice_diff

EXIT_OK, EXIT_CHECK, EXIT_SOLVER, EXIT_CONFIG = 0, 1, 2, 3
ENERGY_TOL = 1e-4

PARAMS = {
    "linear": sc.LinearParams,
    "hut": sc.HutParams,
    "dirac_box": sc.DiracBoxParams,
    "flanked_box": sc.DiracBoxParams,
    "spike": sc.SpikeParams,
}

# per-scenario run defaults: grid step, slice times, curve margin
RUN_DEFAULTS = {
    "linear": dict(grid_step=1 / 64, times=[0.0, 0.5, 1.0], margin=0.0),
    "hut": dict(grid_step=1 / 64, times=[0.0, 0.5, 1.0], margin=0.0),
    "dirac_box": dict(grid_step=1 / 128, times=[-0.125, 0.0, 0.125], margin=0.5),
    "flanked_box": dict(grid_step=1 / 128, times=[0.0, 0.25, 0.3], margin=1.0),
    "spike": dict(grid_step=1 / 512, times=[0.0, 0.02], margin=0.0),
}
SCENARIO_DEFAULTS = {
    "hut": {"margin": 4.0, "dx": 1 / 64},
    "flanked_box": {"a": 0.0625, "b": 0.0625, "gamma_state": 0.0},
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario: str = "linear"
    grid_step: float = 1 / 64
    box: float = math.inf
    times: list = field(default_factory=lambda: [0.0, 0.5, 1.0])
    format: str = "json"
    out: str = "nvwave_out"
    margin: float = 0.0
    params: dict = field(default_factory=dict)

    def validate(self):
        if self.scenario not in PARAMS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {sorted(PARAMS)}")
        if not (self.grid_step > 0 and math.isfinite(self.grid_step)):
            raise ConfigError("grid_step must be a positive number")
        if not self.box > 0:
            raise ConfigError("box must be positive")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if not self.times or not all(math.isfinite(t) for t in self.times):
            raise ConfigError("times must be a non-empty list of numbers")
        if self.margin < 0:
            raise ConfigError("margin must be >= 0")
        return self

    def scenario_params(self):
        p = dict(SCENARIO_DEFAULTS.get(self.scenario, {}))
        p.update(self.params)
        if self.scenario == "flanked_box":
            p["variant"] = "flanked"
        return p


def _default_table(name):
    cls = PARAMS[name]
    d = {f.name: f.default for f in fields(cls)}
    d.update(SCENARIO_DEFAULTS.get(name, {}))
    return d


def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def defaults_toml() -> str:
    lines = ["# nvwave configuration; pick a scenario in [run] and edit its table.", "",
             "[run]"]
    run = asdict(RunConfig())
    run.pop("params")
    for k, v in run.items():
        lines.append(f"{k} = {_toml_value(v)}")
    for name in PARAMS:
        lines += ["", f"[{name}]"]
        rd = RUN_DEFAULTS[name]
        lines.append(f"# run defaults: grid_step = {rd['grid_step']!r}, times = {rd['times']!r}, "
                     f"margin = {rd['margin']!r}")
        for k, v in _default_table(name).items():
            if v is None:
                lines.append(f"# {k} = (automatic)")
            else:
                lines.append(f"{k} = {_toml_value(v)}")
    return "\n".join(lines) + "\n"


def load_config(path: str | None, args) -> RunConfig:
    raw = {}
    if path:
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    run = dict(raw.get("run", {}))
    unknown = set(run) - {f.name for f in fields(RunConfig)} - {"params"}
    if unknown:
        raise ConfigError(f"unknown [run] keys: {sorted(unknown)}")
    scen = args.scenario or run.get("scenario", "linear")
    if scen not in PARAMS:
        raise ConfigError(f"unknown scenario {scen!r}; choose from {sorted(PARAMS)}")
    base = dict(RUN_DEFAULTS[scen])
    base.update({k: v for k, v in run.items() if k != "scenario"})
    base["scenario"] = scen
    if args.grid_step is not None:
        base["grid_step"] = args.grid_step
    if args.box is not None:
        base["box"] = args.box
    if args.times is not None:
        base["times"] = args.times
    if args.format is not None:
        base["format"] = args.format
    if args.out is not None:
        base["out"] = args.out
    params = dict(raw.get(scen, {}))
    allowed = {f.name for f in fields(PARAMS[scen])}
    bad = set(params) - allowed
    if bad:
        raise ConfigError(f"unknown [{scen}] keys: {sorted(bad)}")
    try:
        cfg = RunConfig(params=params, **base)
        cfg.grid_step = float(cfg.grid_step)
        cfg.box = float(cfg.box)
        cfg.margin = float(cfg.margin)
        cfg.times = [float(t) for t in cfg.times]
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


def _parse_times(s: str):
    try:
        return [float(t) for t in s.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad time list {s!r}") from None


# pipeline ---------------------------------------------------------------------

def build_scenario(cfg: RunConfig):
    try:
        return sc.build(cfg.scenario, cfg.scenario_params())
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad [{cfg.scenario}] parameters: {exc}") from None


def solve_scenario(cfg: RunConfig, state, model, times=None):
    times = cfg.times if times is None else times
    scfg = SolverConfig(h=cfg.grid_step, t_max=max(max(times), 0.0), t_min=min(min(times), 0.0),
                        band=cfg.box)
    curve = build_curve(state, model, h=cfg.grid_step, margin=cfg.margin)
    return solve(curve, model, scfg)


def _dump_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def _clean(o):
    if isinstance(o, dict):
        return {str(k): _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, np.ndarray):
        return [_clean(v) for v in o.tolist()]
    if isinstance(o, (np.floating, float)):
        v = float(o)
        return v if math.isfinite(v) else None
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    return o


def _rows_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    keys = sorted({k for r in rows for k in r})
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: json.dumps(_clean(v)) if isinstance(v, (list, tuple, dict)) else _clean(v)
                    for k, v in r.items()})
    return buf.getvalue()


class Writer:
    def __init__(self, cfg: RunConfig):
        self.dir = Path(cfg.out)
        self.fmt = cfg.format
        self.dir.mkdir(parents=True, exist_ok=True)
        self.written = []

    def table(self, stem: str, rows: list[dict]):
        if self.fmt == "json":
            self._put(f"{stem}.json", _dump_json(rows))
        else:
            self._put(f"{stem}.csv", _rows_csv(rows))

    def report(self, stem: str, obj: dict):
        self._put(f"{stem}.json", _dump_json(obj))

    def slice(self, T: float, sl):
        stem = f"slice_t{T:+.6f}"
        if self.fmt == "json":
            self._put(f"{stem}.json", _dump_json(sl.to_dict()))
        else:
            self._put(f"{stem}.csv", sl.to_csv())

    def _put(self, name, text):
        (self.dir / name).write_text(text)
        self.written.append(name)

    def meta(self, info: dict):
        (self.dir / "run_meta.json").write_text(_dump_json(info))


def _energy_rows(slices, E0):
    rows = []
    for T, sl in slices:
        E = sl.energy()
        drift = abs(E - E0) / E0 if E0 > 0 else abs(E)
        rows.append({"T": T, "energy": E, "E0": E0, "rel_drift": drift, "ok": bool(drift <= ENERGY_TOL)})
    return rows


def cmd_simulate(cfg: RunConfig, w: Writer, slices_only: bool = False) -> int:
    st, m, _ = build_scenario(cfg)
    fld = solve_scenario(cfg, st, m)
    slices = [(T, extract(fld, m, T)) for T in cfg.times]
    for T, sl in slices:
        w.slice(T, sl)
    energy = _energy_rows(slices, float(fld.curve.energy))
    if slices_only:
        return EXIT_OK
    w.report("field_summary", fld.summary())
    w.table("energy", energy)
    ev = detect_breaking(fld)
    w.table("events", [e.to_dict() for e in ev])
    w.table("breaking_sets", [b.to_dict() for b in breaking_sets(ev)])
    return EXIT_OK if all(r["ok"] for r in energy) else EXIT_CHECK


def cmd_predict(cfg: RunConfig, w: Writer) -> int:
    st, m, _ = build_scenario(cfg)
    w.table("predictions", [p.to_dict() for p in predict_grid(st, m)])
    return EXIT_OK


def cmd_check(cfg: RunConfig, w: Writer) -> int:
    st, m, p = build_scenario(cfg)
    name = cfg.scenario
    if name == "spike":
        rep = sc.check_spike(p, cfg.grid_step)
    elif name == "linear":
        rep = sc.check_linear(solve_scenario(cfg, st, m), p, cfg.times)
    elif name == "hut":
        times = [t for t in cfg.times if t > 0] or [1.0]
        fld = solve_scenario(cfg, st, m, times=[0.0, max(times)])
        rep = sc.check_hut_nonconservative(fld, p)
    else:
        variant = "flanked" if name == "flanked_box" else "plain"
        span = max(p.alpha, p.beta if variant == "flanked" else p.alpha)
        fld = solve_scenario(cfg, st, m, times=[-span, span])
        rep = sc.check_linear_box(fld, p, variant, m)
    w.report("check", {"scenario": name, "report": rep.to_dict(), "ok": bool(rep.ok)})
    return EXIT_OK if rep.ok else EXIT_CHECK


def cmd_oracle_diff(cfg: RunConfig, w: Writer) -> int:
    st, m, _ = build_scenario(cfg)
    if st.mu.atom_pos.size or st.nu.atom_pos.size:
        raise ConfigError("oracle-diff needs data without atoms")
    tl = earliest_window_start(st, m)
    T = max(cfg.times, key=abs)
    if tl is not None and abs(T) >= tl:
        raise ConfigError(f"T={T} is past the earliest predicted breaking time {tl}")
    fld = solve_scenario(cfg, st, m)
    sl = extract(fld, m, T).state
    # the oracle runs on a grid of step 4 h^2 so its O(dx) error is O(h^2)
    g = st.grid
    n = int(round((g[-1] - g[0]) / (4 * cfg.grid_step ** 2)))
    go = np.linspace(g[0], g[-1], n + 1)
    orc0 = SmoothRSState(go, np.interp(go, g, st.u), _sample_cells(st, go, st.R),
                         _sample_cells(st, go, st.S), st.time)
    orc, _ = rs_run(orc0, m, T, tl)
    L = 0.5 * (g[-1] - g[0])
    mid = 0.5 * (g[-1] + g[0])
    shrink = abs(T) * float(m.kappa)
    rep = slice_diff(sl, orc, window=(mid - L + shrink, mid + L - shrink), h=cfg.grid_step)
    out = rep.to_dict()
    out["t_limit"] = tl
    w.report("oracle_diff", out)
    return EXIT_OK


def _sample_cells(st, go, vals):
    xc = 0.5 * (go[1:] + go[:-1])
    k = np.clip(np.searchsorted(st.grid, xc, side="right") - 1, 0, vals.size - 1)
    return vals[k]


COMMANDS = {
    "simulate": cmd_simulate,
    "predict": cmd_predict,
    "slice": lambda cfg, w: cmd_simulate(cfg, w, slices_only=True),
    "check": cmd_check,
    "oracle-diff": cmd_oracle_diff,
}


HELP = {
    "simulate": "solve, write slices, energy, breaking events and sets",
    "predict": "breaking windows at every cell of the initial data",
    "slice": "solve and write the slices only",
    "check": "run the expected-outcome checker of the scenario",
    "oracle-diff": "compare with the upwind R-S solver at the largest |time|",
}


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nvwave", description="Conservative NVW solver.",
                                 epilog="exit codes: 0 pass, 1 check failure, 2 solver failure, "
                                        "3 invalid config")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("defaults", help="print the default configuration (TOML)")
    for name in COMMANDS:
        sp = sub.add_parser(name, help=HELP[name], description=HELP[name])
        sp.add_argument("--config", metavar="PATH", help="TOML file with [run] and scenario tables")
        sp.add_argument("--scenario", choices=sorted(PARAMS), help="overrides [run] scenario")
        sp.add_argument("--out", metavar="DIR", help="output directory (created if missing)")
        sp.add_argument("--format", choices=("csv", "json"), help="format of slices and tables")
        sp.add_argument("--grid-step", type=float, metavar="H", help="Lagrangian grid step")
        sp.add_argument("--box", type=float, metavar="L",
                        help="keep only nodes within Lagrangian distance L of the initial curve")
        sp.add_argument("--times", type=_parse_times, metavar="t1,t2,...", help="slice times")
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.command == "defaults":
        sys.stdout.write(defaults_toml())
        return EXIT_OK
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config, args)
        w = Writer(cfg)
        code = COMMANDS[args.command](cfg, w)
    except ConfigError as exc:
        print(f"nvwave: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OracleRefused as exc:
        print(f"nvwave: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StepFailure as exc:
        print(f"nvwave: solver failure: {exc} (side={exc.side}, front={exc.front}, "
              f"index={exc.index})", file=sys.stderr)
        return EXIT_SOLVER
    except (OutOfRange, BlowUp, FloatingPointError) as exc:
        print(f"nvwave: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    w.meta({"command": args.command, "seconds": time.perf_counter() - t0,
            "files": sorted(w.written), "exit_code": code})
    status = "ok" if code == EXIT_OK else "check failed"
    print(f"nvwave {args.command}: {status}; wrote {len(w.written)} files to {w.dir}")
    return code


if __name__ == "__main__":
    sys.exit(main())
