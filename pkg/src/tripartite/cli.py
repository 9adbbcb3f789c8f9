"""Command-line front end: ``tripartite <command> [options]``.

Each command evaluates one model over a sweep and writes a table (CSV with a
``#`` comment header, or JSON).  Options may also come from a flat JSON file
given with ``--config``; explicit flags win.

Exit status: 0 on success, 1 for a configuration error, 2 for a numerical
failure (singular drift, diverged ensemble, degenerate inference).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import beamsplitter as bs
from . import criteria, intracavity, opo, positivep, undepleted
from .output import render_csv, render_json

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# per command: parameter -> (type, default); flag names use dashes
PARAMS = {
    "bs-closed": {"mu": (float, bs.AOKI_MU), "nu": (float, bs.AOKI_NU), "r": (float, 1.0)},
    "bs-spectral": {"mu": (float, bs.AOKI_MU), "nu": (float, bs.AOKI_NU),
                    "gamma_a": (float, 1.0), "gamma_b": (float, 10.0), "kappa": (float, 1.0),
                    "pump_ratio": (float, 0.5)},
    "opo": {"gamma_a": (float, 1.0), "gamma_b": (float, 10.0), "kappa": (float, 1.0),
            "pump_ratio": (float, 0.5)},
    "undepleted": {"tau": (float, 0.5)},
    "positive-p": {"chi": (float, 1e-2), "beta0": (float, 1e3), "traj": (int, 100_000),
                   "dt": (float, 1e-4), "zeta_max": (float, 0.4), "points": (int, 21),
                   "batches": (int, 32), "alpha0": (float, 0.0)},
    "intracavity": {"gamma": (float, 10.0), "kappa": (float, 1.0), "chi": (float, 1e-2),
                    "pump_ratio": (float, 0.5)},
}

# axes each command can sweep (a sweep replaces the scalar parameter)
SWEEPABLE = {
    "bs-closed": ("r", "mu", "nu"),
    "bs-spectral": ("pump_ratio",),
    "opo": ("pump_ratio",),
    "undepleted": ("tau",),
    "positive-p": (),
    "intracavity": ("pump_ratio", "gamma", "kappa", "chi"),
}

OMEGA_COMMANDS = ("bs-spectral", "opo", "intracavity")
GLOBAL_KEYS = ("sweep", "omega_grid", "seed", "format")


def _key(name: str) -> str:
    return name.replace("-", "_")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tripartite", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for cmd, params in PARAMS.items():
        p = sub.add_parser(cmd)
        for name, (typ, default) in params.items():
            p.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None,
                           help=f"(default {default!r})")
        if SWEEPABLE[cmd]:
            p.add_argument("--sweep", nargs=4, metavar=("AXIS", "START", "STOP", "POINTS"))
        if cmd in OMEGA_COMMANDS:
            p.add_argument("--omega-grid", dest="omega_grid", nargs=3, metavar=("START", "STOP", "POINTS"))
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--config", help="flat JSON file of option values")
        p.add_argument("--output", "-o", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--workers", type=int, default=1)
    return parser


def _grid(spec, what):
    if len(spec) != 3:
        raise ConfigError(f"{what} needs START STOP POINTS")
    try:
        start, stop = float(spec[0]), float(spec[1])
        points = int(spec[2])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {what}: {exc}") from None
    if not (math.isfinite(start) and math.isfinite(stop)):
        raise ConfigError(f"{what} bounds must be finite")
    if points < 2:
        raise ConfigError(f"{what} needs at least 2 points")
    return np.linspace(start, stop, points)


def resolve(args) -> dict:
    """Merge defaults, the config file and flags into one flat dict."""
    cmd = args.command
    params = PARAMS[cmd]
    from_file = {}
    if args.config:
        try:
            with open(args.config) as fh:
                from_file = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(from_file, dict):
            raise ConfigError("config file must hold a flat JSON object")
        from_file = {_key(k): v for k, v in from_file.items()}
        allowed = set(params) | set(GLOBAL_KEYS)
        unknown = sorted(set(from_file) - allowed)
        if unknown:
            raise ConfigError(f"unknown config keys for {cmd}: {', '.join(unknown)}")

    cfg = {}
    for name, (typ, default) in params.items():
        v = getattr(args, name)
        if v is None:
            v = from_file.get(name, default)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{name} must be a number")
        if typ is int and float(v) != int(v):
            raise ConfigError(f"{name} must be an integer")
        cfg[name] = typ(v)

    for name in ("sweep", "omega_grid"):
        v = getattr(args, name, None)
        cfg[name] = list(v) if v is not None else from_file.get(name)
    seed = args.seed if args.seed is not None else from_file.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        raise ConfigError("seed must be a non-negative integer")
    cfg["seed"] = seed
    fmt = args.format or from_file.get("format") or _format_from_path(args.output)
    if fmt not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    cfg["format"] = fmt

    if cfg["sweep"] is not None:
        if not SWEEPABLE[cmd]:
            raise ConfigError(f"{cmd} does not take --sweep")
        if len(cfg["sweep"]) != 4:
            raise ConfigError("--sweep needs AXIS START STOP POINTS")
        axis = _key(str(cfg["sweep"][0]))
        if axis not in SWEEPABLE[cmd]:
            raise ConfigError(f"{cmd} cannot sweep {cfg['sweep'][0]!r}; "
                              f"choose from {', '.join(SWEEPABLE[cmd])}")
        values = _grid(cfg["sweep"][1:], "--sweep")
        cfg["sweep"] = [axis] + [float(x) for x in cfg["sweep"][1:3]] + [len(values)]
    if cfg["omega_grid"] is not None:
        if cmd not in OMEGA_COMMANDS:
            raise ConfigError(f"{cmd} does not take --omega-grid")
        w = _grid(cfg["omega_grid"], "--omega-grid")
        cfg["omega_grid"] = [float(w[0]), float(w[-1]), len(w)]
    return cfg


def _format_from_path(path):
    if path and path.lower().endswith(".json"):
        return "json"
    return "csv"


def _sweep_values(cfg):
    if cfg["sweep"] is None:
        return None, None
    axis, start, stop, n = cfg["sweep"]
    return axis, np.linspace(start, stop, n)


def _omega(cfg, default=(0.0, 20.0, 201)):
    spec = cfg["omega_grid"] or default
    return np.linspace(spec[0], spec[1], int(spec[2]))


def _points(cfg):
    """Parameter dicts for each sweep point (one point when not sweeping)."""
    base = {k: cfg[k] for k in cfg if k not in GLOBAL_KEYS}
    axis, values = _sweep_values(cfg)
    if axis is None:
        return [base]
    return [dict(base, **{axis: float(v)}) for v in values]


def _parallel_map(fn, items, workers):
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _criteria_cols(t) -> dict:
    rep = criteria.full_report(t)
    return {
        "v12": rep.v12, "v13": rep.v13, "v23": rep.v23,
        "epr_one": rep.epr_one_mode[(1, 2)].product,
        "epr_two": rep.epr_two_mode[0].product,
    }


# --- commands -------------------------------------------------------------

def _bs_closed_point(p):
    net = bs.AokiNetwork(p["mu"], p["nu"])
    t = bs.propagate_static(bs.default_inputs(p["r"]), net)
    row = {"r": p["r"], "mu": p["mu"], "nu": p["nu"]}
    row.update(_criteria_cols(t))
    row["duan_bs1"] = bs.bs1_duan(p["r"], p["mu"])
    return [row]


def _opo_point(p, omega):
    params = opo.OpoParams.at_ratio(p["gamma_a"], p["gamma_b"], p["kappa"], p["pump_ratio"])
    branch = opo.Branch.BELOW if p["pump_ratio"] < 1 else opo.Branch.ABOVE
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", opo.NearThresholdWarning)
        sp = opo.spectrum(params, omega, branch)
    return params, branch, sp


def _opo_rows(p, omega):
    _, branch, sp = _opo_point(p, omega)
    return [{"pump_ratio": p["pump_ratio"], "branch": branch.value, "omega": w, "s_x": sx, "s_y": sy,
             "near_threshold": sp.near_threshold}
            for w, sx, sy in zip(omega, sp.s_x, sp.s_y)]


def _bs_spectral_rows(p, omega):
    params, branch, sp = _opo_point(p, omega)
    pairs, near = bs.opo_inputs(params, omega, branch)
    sm = bs.propagate_spectral(pairs, bs.AokiNetwork(p["mu"], p["nu"]), omega)
    cols = _criteria_cols(sm.table)
    rows = []
    for k, w in enumerate(omega):
        row = {"pump_ratio": p["pump_ratio"], "omega": w}
        row.update({c: v[k] for c, v in cols.items()})
        row["near_threshold"] = near
        rows.append(row)
    return rows


def _undepleted_point(p):
    t = undepleted.moment_table(p["tau"])
    row = {"tau": p["tau"]}
    row.update(_criteria_cols(t))
    row["v3_closed"] = undepleted.v3_closed(p["tau"])
    return [row]


_NAN_COLS = ("v12", "v13", "v23", "epr_one", "epr_two")


def _intracavity_rows(p, omega):
    cp = intracavity.CavityParams.at_ratio(p["gamma"], p["kappa"], p["chi"], p["pump_ratio"])
    near = abs(cp.pump_ratio - 1.0) < opo.THRESHOLD_BAND
    base = {"pump_ratio": p["pump_ratio"], "epsilon": cp.epsilon}
    if near:
        return [dict(base, omega=w, **{c: math.nan for c in _NAN_COLS}, near_threshold=True)
                for w in omega]
    sm = intracavity.spectrum_matrix(cp, omega)
    cols = _criteria_cols(sm.table)
    return [dict(base, omega=w, **{c: v[k] for c, v in cols.items()}, near_threshold=False)
            for k, w in enumerate(omega)]


def _intracavity_single(p, omega):
    """A lone point inside the band is evaluated (and may fail) rather than masked."""
    cp = intracavity.CavityParams.at_ratio(p["gamma"], p["kappa"], p["chi"], p["pump_ratio"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", opo.NearThresholdWarning)
        sm = intracavity.spectrum_matrix(cp, omega)
    cols = _criteria_cols(sm.table)
    near = abs(cp.pump_ratio - 1.0) < opo.THRESHOLD_BAND
    return [{"pump_ratio": p["pump_ratio"], "epsilon": cp.epsilon, "omega": w,
             **{c: v[k] for c, v in cols.items()}, "near_threshold": near}
            for k, w in enumerate(omega)]


class _Task:
    """Picklable wrapper so sweep points can go to worker processes."""

    def __init__(self, fn, omega=None):
        self.fn, self.omega = fn, omega

    def __call__(self, p):
        return self.fn(p) if self.omega is None else self.fn(p, self.omega)


def _positive_p(cfg, workers):
    sim = positivep.SimConfig(
        chi=cfg["chi"], beta0=cfg["beta0"], n_traj=cfg["traj"], dt=cfg["dt"],
        zeta_max=cfg["zeta_max"], n_points=cfg["points"], batch_count=cfg["batches"],
        alpha0=cfg["alpha0"], seed=cfg["seed"] if cfg["seed"] is not None else 0,
    )
    res = positivep.run_ensemble(sim, workers=workers)
    cols = res.columns()
    cols["v3_undepleted"] = undepleted.v3_closed(res.zeta)
    names = list(cols)
    rows = [{c: cols[c][k] for c in names} for k in range(len(res.zeta))]
    extra = {"divergence_count": res.divergence_count}
    return names, rows, extra, res


COLUMNS = {
    "bs-closed": ["r", "mu", "nu", "v12", "v13", "v23", "epr_one", "epr_two", "duan_bs1"],
    "bs-spectral": ["pump_ratio", "omega", "v12", "v13", "v23", "epr_one", "epr_two", "near_threshold"],
    "opo": ["pump_ratio", "branch", "omega", "s_x", "s_y", "near_threshold"],
    "undepleted": ["tau", "v12", "v13", "v23", "epr_one", "epr_two", "v3_closed"],
    "intracavity": ["pump_ratio", "epsilon", "omega", "v12", "v13", "v23", "epr_one", "epr_two",
                    "near_threshold"],
}


def run(cfg: dict, command: str, workers: int = 1):
    """Evaluate ``command``; returns ``(columns, rows, extra, status)``."""
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    status = EXIT_OK
    extra = {}
    if command == "positive-p":
        try:
            names, rows, extra, res = _positive_p(cfg, workers)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if res.divergence_flagged:
            print(f"tripartite: {res.divergence_count} of {res.config.n_traj} trajectories diverged",
                  file=sys.stderr)
            status = EXIT_NUMERIC
        return names, rows, extra, status

    points = _points(cfg)
    omega = _omega(cfg) if command in OMEGA_COMMANDS else None
    try:
        if command == "bs-closed":
            task = _Task(_bs_closed_point)
        elif command == "undepleted":
            task = _Task(_undepleted_point)
        elif command == "opo":
            task = _Task(_opo_rows, omega)
        elif command == "bs-spectral":
            for p in points:
                if abs(p["pump_ratio"] - 1.0) < 1e-12:
                    raise ConfigError("bs-spectral needs pump_ratio != 1")
            task = _Task(_bs_spectral_rows, omega)
        elif command == "intracavity":
            task = _Task(_intracavity_rows if cfg["sweep"] else _intracavity_single, omega)
        else:  # pragma: no cover - argparse restricts the choices
            raise ConfigError(f"unknown command {command}")
        chunks = _parallel_map(task, points, workers)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows = [r for chunk in chunks for r in chunk]
    if command in ("bs-closed", "undepleted") and cfg["sweep"] is None:
        extra["report"] = criteria.full_report(_single_table(command, points[0])).to_dict()
    return COLUMNS[command], rows, extra, status


def _single_table(command, p):
    if command == "bs-closed":
        return bs.propagate_static(bs.default_inputs(p["r"]), bs.AokiNetwork(p["mu"], p["nu"]))
    return undepleted.moment_table(p["tau"])


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve(args)
        columns, rows, extra, status = run(cfg, args.command, args.workers)
    except ConfigError as exc:
        print(f"tripartite: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (intracavity.SingularDriftError, positivep.SimulationError,
            criteria.DegenerateInferenceError, FloatingPointError) as exc:
        print(f"tripartite: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    echo = {k: v for k, v in cfg.items() if k != "format"}
    if cfg["format"] == "json":
        text = render_json(args.command, echo, columns, rows, seed=cfg["seed"], extra=extra)
    else:
        text = render_csv(args.command, echo, columns, rows)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
