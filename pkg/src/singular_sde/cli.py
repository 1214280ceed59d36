"""Command-line experiment driver.

Usage::

    singular-sde SUBCOMMAND [--config FILE] [--seed N] [--out DIR] [--reps N]
                 [--set section.key=value ...] [named overrides]

Exit status: 0 on success, 2 for invalid configuration or an inadmissible
drift, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import configparser
import copy
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .drift import check_admissibility, make_drift
from .errors import AdmissibilityError, NumericalFailure, ParameterError, ResourceError
from .estimate import estimate_from_observations
from .heston import HestonConfig, simulate_heston
from .io import read_csv, write_csv
from .longrun import ergodic_average, hitting_times, pullback_batch
from .malliavin import empirical_density, nv_density_estimate
from .noise import NoiseConfig, fgn_increments
from .scheme import convergence_study, solve_paths
from .transform import lamperti_density

SUBCOMMANDS = ("check-drift", "simulate", "convergence", "ergodic", "pullback", "hitting", "estimate", "density", "heston")

DEFAULTS = {
    "model": {"drift": "b1", "u": 1.0, "v": 1.0, "w": 1.0, "gamma": 2.0, "lambda": 0.0, "mu": 0.0, "sigma": 0.3, "x0": 1.0},
    "noise": {"hurst": 0.7, "alpha": 0.6, "method": "auto"},
    "grid": {"T": 1.0, "n": 1024},
    "mc": {"reps": 1, "seed": 0},
    "convergence": {"n_list": "64,128,256,512,1024,2048", "reference_n": 16384},
    "ergodic": {"phi": "clip:10", "x0_pair": "0.5,5"},
    "pullback": {"n_max": 10, "steps_per_unit": 256},
    "hitting": {"t_star": 1.0, "level": "root"},
    "estimate": {"input": ""},
    "density": {
        "t": 1.0, "n": 128, "paths": 10000, "mehler_nodes": 1, "u_nodes": 16, "u_max": 8.0, "bins": 32,
        "x_min": "auto", "x_max": "auto", "points": 201, "hist_samples": 10000, "hist_bins": 40,
        "kappa": 1.0, "constant": "moment",
    },
    "heston": {"S0": 1.0, "z0": 0.04, "v": 0.04, "w": 1.0, "zeta": 0.2, "gamma": 1.0, "mu": 0.0, "r": 0.0, "S0_bond": 1.0},
}

# named flags -> (section, key)
NAMED = {
    "hurst": ("noise", "hurst"), "alpha": ("noise", "alpha"), "method": ("noise", "method"),
    "T": ("grid", "T"), "n": ("grid", "n"),
    "drift": ("model", "drift"), "gamma": ("model", "gamma"), "sigma": ("model", "sigma"), "x0": ("model", "x0"),
    "u": ("model", "u"), "v": ("model", "v"), "w": ("model", "w"),
}


def _coerce(value, like):
    if isinstance(like, bool):
        return str(value).lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        try:
            return int(value)
        except ValueError:
            f = float(value)
            if not f.is_integer():
                raise ParameterError(f"expected an integer, got {value!r}")
            return int(f)
    if isinstance(like, float):
        try:
            return float(value)
        except ValueError as exc:
            raise ParameterError(f"expected a number, got {value!r}") from exc
    return str(value)


def _set(cfg, section, key, value):
    if section not in cfg:
        raise ParameterError(f"unknown config section [{section}]")
    like = cfg[section].get(key, "")
    cfg[section][key] = _coerce(value, like)


def resolve_config(config_path=None, sets=(), named=None, seed=None, reps=None) -> dict:
    """Defaults, then the INI file, then ``--set`` pairs, then named flags."""
    cfg = copy.deepcopy(DEFAULTS)
    if config_path:
        parser = configparser.ConfigParser()
        parser.optionxform = str
        try:
            with open(config_path) as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ParameterError(f"cannot read config: {exc}") from exc
        for section in parser.sections():
            for key, value in parser.items(section):
                _set(cfg, section, key, value)
    for item in sets:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ParameterError(f"--set expects section.key=value, got {item!r}")
        lhs, value = item.split("=", 1)
        section, key = lhs.split(".", 1)
        _set(cfg, section, key, value)
    for name, value in (named or {}).items():
        if value is not None:
            _set(cfg, *NAMED[name], value)
    if seed is not None:
        cfg["mc"]["seed"] = int(seed)
    if reps is not None:
        cfg["mc"]["reps"] = int(reps)
    if cfg["mc"]["reps"] < 1:
        raise ParameterError("reps must be at least 1")
    return cfg


def _floats(text) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise ParameterError(f"bad number list {text!r}") from exc


def _spec(cfg, certify=True):
    m = cfg["model"]
    params = dict(u=m["u"], v=m["v"], w=m["w"], gamma=m["gamma"])
    if "_plus_" in m["drift"]:
        params.update(lam=m["lambda"], mu=m["mu"])
    spec = make_drift(m["drift"], **params)
    if certify:
        rep = check_admissibility(spec, cfg["noise"]["alpha"])
        if not rep.admissible:
            raise AdmissibilityError(rep.summary())
    return spec


def _noise(cfg, n=None, T=None, two_sided=False):
    return NoiseConfig(
        hurst=cfg["noise"]["hurst"], T=T if T is not None else cfg["grid"]["T"], n=n or cfg["grid"]["n"],
        seed=cfg["mc"]["seed"], method=cfg["noise"]["method"], two_sided=two_sided,
        holder_alpha=cfg["noise"]["alpha"] if cfg["noise"]["alpha"] < cfg["noise"]["hurst"] else None,
    )


def _simulate(cfg, spec, x0=None):
    nc = _noise(cfg)
    inc = fgn_increments(nc, list(range(cfg["mc"]["reps"])))
    x0 = cfg["model"]["x0"] if x0 is None else x0
    return nc, solve_paths(spec, cfg["model"]["sigma"], x0, nc.dt, inc)


# ---------------------------------------------------------------------------
# subcommands; each returns (header, rows, message)


def cmd_check_drift(cfg):
    spec = _spec(cfg, certify=False)
    rep = check_admissibility(spec, cfg["noise"]["alpha"])
    msg = rep.summary() + f"; x_b={spec.root_x_b:.17g}"
    if not rep.admissible:
        raise AdmissibilityError(msg)
    return None, None, msg


def cmd_simulate(cfg):
    spec = _spec(cfg)
    nc, knots = _simulate(cfg, spec)
    t = np.arange(nc.n + 1) * nc.dt
    if knots.shape[0] == 1:
        return ["t", "x"], np.column_stack([t, knots[0]]), None
    return ["t"] + [f"x_{r}" for r in range(knots.shape[0])], np.column_stack([t, knots.T]), None


def cmd_convergence(cfg):
    spec = _spec(cfg)
    c = cfg["convergence"]
    res = convergence_study(
        spec, cfg["model"]["sigma"], cfg["model"]["x0"], cfg["noise"]["hurst"], cfg["noise"]["alpha"],
        n_list=[int(v) for v in _floats(c["n_list"])], reference_n=int(c["reference_n"]),
        reps=cfg["mc"]["reps"], seed=cfg["mc"]["seed"], T=cfg["grid"]["T"], method=cfg["noise"]["method"],
    )
    rows = np.column_stack([res.n_list, res.median_sup_error, res.q25, res.q75])
    return ["n", "median_sup_error", "q25", "q75"], rows, f"slope={res.slope:.6g}"


def cmd_ergodic(cfg):
    spec = _spec(cfg)
    a, b = _floats(cfg["ergodic"]["x0_pair"])
    nc = _noise(cfg)
    inc = fgn_increments(nc, list(range(cfg["mc"]["reps"])))
    sigma = cfg["model"]["sigma"]
    Xa = solve_paths(spec, sigma, a, nc.dt, inc)
    Xb = solve_paths(spec, sigma, b, nc.dt, inc)
    phi = cfg["ergodic"]["phi"]
    Ia = np.atleast_1d(ergodic_average(phi, Xa, nc.T))
    Ib = np.atleast_1d(ergodic_average(phi, Xb, nc.T))
    rows = np.column_stack([np.arange(len(Ia)), Ia, Ib, np.abs(Ia - Ib)])
    return ["rep", "average_a", "average_b", "abs_diff"], rows, None


def cmd_pullback(cfg):
    spec = _spec(cfg)
    p = cfg["pullback"]
    n_max, m = int(p["n_max"]), int(p["steps_per_unit"])
    if n_max < 1:
        raise ParameterError("n_max must be at least 1")
    nc = _noise(cfg, n=n_max * m, T=float(n_max), two_sided=True)
    inc = fgn_increments(nc, list(range(cfg["mc"]["reps"])))[:, : nc.n]
    vals = pullback_batch(spec, cfg["model"]["sigma"], cfg["model"]["x0"], inc, m, n_max)
    rows = []
    for r, v in enumerate(vals):
        gaps = np.append(np.abs(np.diff(v)), np.nan)
        for k in range(n_max + 1):
            rows.append([r, k, v[k], gaps[k]])
    return ["rep", "n", "X_n", "gap"], np.array(rows), None


def cmd_hitting(cfg):
    spec = _spec(cfg)
    h = cfg["hitting"]
    level = spec.root_x_b if str(h["level"]) == "root" else float(h["level"])
    nc, knots = _simulate(cfg, spec)
    tau = hitting_times(knots, np.arange(nc.n + 1) * nc.dt, level, float(h["t_star"]))
    frac = float(np.mean(~np.isnan(tau)))
    return ["rep", "tau"], np.column_stack([np.arange(len(tau)), tau]), f"hit_fraction={frac:.6g}"


def cmd_estimate(cfg):
    spec = _spec(cfg)
    src = cfg["estimate"]["input"]
    if src:
        _, header, data = read_csv(src)
        if header[0] != "t" or data.shape[1] < 2:
            raise ParameterError("estimate input must be a path CSV with a t column")
        t = data[:, 0]
        T, n = float(t[-1] - t[0]), len(t) - 1
        paths = data[:, 1:].T
    else:
        nc, paths = _simulate(cfg, spec)
        T, n = nc.T, nc.n
    rows = []
    for r, X in enumerate(paths):
        e = estimate_from_observations(spec, X, T, n)
        rows.append([r, e.h_hat, e.sigma_hat, e.v1, e.v2])
    return ["rep", "h_hat", "sigma_hat", "v1", "v2"], np.array(rows), None


def cmd_density(cfg):
    spec = _spec(cfg)
    d = cfg["density"]
    H = cfg["noise"]["hurst"]
    sigma, x0 = cfg["model"]["sigma"], cfg["model"]["x0"]
    t, n, P = float(d["t"]), int(d["n"]), int(d["paths"])
    seed = cfg["mc"]["seed"]
    # independent histogram sample: replication indices after the estimator's
    nc = NoiseConfig(hurst=H, T=t, n=n, seed=seed, method=cfg["noise"]["method"])
    inc = fgn_increments(nc, list(range(P, P + int(d["hist_samples"]))))
    Xh = solve_paths(spec, sigma, x0, t / n, inc)[:, -1]
    lo = float(np.quantile(Xh, 0.001)) if d["x_min"] == "auto" else float(d["x_min"])
    hi = float(np.quantile(Xh, 0.999)) if d["x_max"] == "auto" else float(d["x_max"])
    x = np.linspace(lo, hi, int(d["points"]))
    mc = {k: d[k] for k in ("paths", "mehler_nodes", "u_nodes", "u_max", "bins", "n")}
    res = nv_density_estimate(spec, sigma, x0, t, x, mc=mc, seed=seed, hurst=H,
                              method=cfg["noise"]["method"], constant=d["constant"])
    hist = empirical_density(Xh, bins=int(d["hist_bins"]))
    idx = np.clip(np.searchsorted(hist.edges, x, side="right") - 1, 0, len(hist.density) - 1)
    inside = (x >= hist.edges[0]) & (x <= hist.edges[-1])
    f_hist = np.where(inside, hist.density[idx], 0.0)
    header, cols = ["x", "f_nv", "f_hist"], [x, res.density, f_hist]
    kappa = float(d["kappa"])
    if kappa != 1.0:
        z = x ** kappa
        f_z = lamperti_density(lambda xx: np.interp(xx, x, res.density), z, kappa)
        header += ["z", "f_z"]
        cols += [z, f_z]
    msg = "; ".join(res.warnings) if res.warnings else None
    return header, np.column_stack(cols), msg


def cmd_heston(cfg):
    h = cfg["heston"]
    hc = HestonConfig(
        S0=h["S0"], z0=h["z0"], v=h["v"], w=h["w"], zeta=h["zeta"], gamma=h["gamma"],
        hurst=cfg["noise"]["hurst"], mu=float(h["mu"]), r=float(h["r"]), T=cfg["grid"]["T"],
        n=cfg["grid"]["n"], seed=cfg["mc"]["seed"], S0_bond=h["S0_bond"], method=cfg["noise"]["method"],
    )
    res = simulate_heston(hc, range(cfg["mc"]["reps"]))
    if res.S.shape[0] == 1:
        return ["t", "Z", "S", "S_discounted"], np.column_stack([res.times, res.Z[0], res.S[0], res.S_discounted[0]]), None
    q = lambda a, p: np.quantile(a, p, axis=0)
    rows = np.column_stack([
        res.times, res.Z.mean(axis=0), res.S.mean(axis=0), res.S_discounted.mean(axis=0),
        q(res.S_discounted, 0.05), q(res.S_discounted, 0.5), q(res.S_discounted, 0.95),
    ])
    return ["t", "Z_mean", "S_mean", "S_discounted_mean", "S_discounted_q05", "S_discounted_q50", "S_discounted_q95"], rows, None


COMMANDS = {
    "check-drift": cmd_check_drift, "simulate": cmd_simulate, "convergence": cmd_convergence,
    "ergodic": cmd_ergodic, "pullback": cmd_pullback, "hitting": cmd_hitting,
    "estimate": cmd_estimate, "density": cmd_density, "heston": cmd_heston,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="singular-sde", description="Singular SDE experiments driven by fractional noise.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI file with [model], [noise], [grid], [mc] and per-command sections")
        p.add_argument("--seed", type=int)
        p.add_argument("--reps", type=int)
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--tag", help="filename tag (default: seed<N>)")
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
        for flag in NAMED:
            p.add_argument(f"--{flag}")
        if name == "estimate":
            p.add_argument("--input", help="path CSV to estimate from")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        named = {k: getattr(args, k) for k in NAMED}
        sets = list(args.set)
        if getattr(args, "input", None):
            sets.append(f"estimate.input={args.input}")
        cfg = resolve_config(args.config, sets, named, args.seed, args.reps)
        header, rows, msg = COMMANDS[args.subcommand](cfg)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailure, ResourceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    if msg:
        print(msg)
    if header is not None:
        tag = args.tag or f"seed{cfg['mc']['seed']}"
        path = Path(args.out) / f"{args.subcommand}-{tag}.csv"
        write_csv(path, header, rows, {"subcommand": args.subcommand, "config": cfg})
        print(path)
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
