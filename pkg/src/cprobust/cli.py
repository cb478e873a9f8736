"""Command-line front end.

Every subcommand reads an optional JSON config (``--config``), applies flag
overrides and writes CSV files with a header row into ``--out``. Exit codes:
0 success, 1 configuration or I/O error, 2 numerical failure.

Config keys (all optional)::

    {
      "sequences": ["SK1", "CORPSE"],       # default: all seven
      "theta": 3.14159...,                  # target angle, default pi
      "omega": 1.5e6,                       # peak Rabi rate in rad/s
      "ramp": 0.0,                          # trapezoid ramp time in s
      "spectrum": {"scale": 2.07e9, "omega_min": 6.283, "omega_max": 4.5e9,
                   "convention": "wiener_khinchin"},
      "omega_b": {"a": [0.001, 0.01], "d": null},   # knee grids in units of omega
      "ff": {"lo": 1e-4, "hi": 3.0, "points_per_decade": 200, "slope_band": [1e-3, 1e-2]},
      "mc": {"N": 2000, "seed": 0, "dt": null, "frozen": false},
      "geometry": {"omega_over_Omega": [0.01, 0.3]}
    }

A null knee grid switches that noise quadrature off; when both grids are
given, every pair is evaluated. ``CPROBUST_THREADS`` sets the worker count.
"""
from __future__ import annotations

import argparse
import copy
import csv
import itertools
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import analytic, filterfn, geometry, mcsim
from .noisegen import NyquistWarning
from .pulses import SEQUENCE_NAMES, SequenceError, build_sequence, trapezoidalize
from .spectra import (
    CAPTION_OMEGA_MAX,
    CAPTION_OMEGA_MIN,
    CAPTION_RABI,
    CAPTION_SCALE,
    DEFAULT_CONVENTION,
    NoiseSpectrum,
    SpectrumError,
)

DEFAULTS = {
    "sequences": list(SEQUENCE_NAMES),
    "theta": float(np.pi),
    "omega": CAPTION_RABI,
    "ramp": 0.0,
    "spectrum": {"scale": CAPTION_SCALE, "omega_min": CAPTION_OMEGA_MIN,
                 "omega_max": CAPTION_OMEGA_MAX, "convention": DEFAULT_CONVENTION},
    "omega_b": {"a": [1e-3, 3.1622776601683794e-3, 1e-2, 3.1622776601683794e-2, 1e-1], "d": None},
    "ff": {"lo": 1e-4, "hi": 3.0, "points_per_decade": 200, "slope_band": [1e-3, 1e-2]},
    "mc": {"N": 2000, "seed": 0, "dt": None, "frozen": False},
    "geometry": {"omega_over_Omega": [0.01, 0.3]},
}

NUMERICAL_ERRORS = (analytic.QuadratureError, analytic.DcFitError, filterfn.DegenerateFitError,
                    FloatingPointError, np.linalg.LinAlgError)


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer, str)):
        return str(x)
    return repr(float(x))


def _merge(base, override):
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(args) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        cfg = _merge(cfg, user)
    if args.seq:
        cfg["sequences"] = [s.strip() for s in args.seq.split(",") if s.strip()]
    if getattr(args, "omega_b", None):
        try:
            values = [float(v) for v in args.omega_b.split(",")]
        except ValueError:
            raise ConfigError(f"bad --omega-b value {args.omega_b!r}") from None
        quads = {"a": ["a"], "d": ["d"], "both": ["a", "d"]}[args.quadrature or "a"]
        cfg["omega_b"] = {q: (values if q in quads else None) for q in ("a", "d")}
    elif getattr(args, "quadrature", None):
        grid = cfg["omega_b"].get("a") or cfg["omega_b"].get("d")
        quads = {"a": ["a"], "d": ["d"], "both": ["a", "d"]}[args.quadrature]
        cfg["omega_b"] = {q: (grid if q in quads else None) for q in ("a", "d")}
    if getattr(args, "n", None) is not None:
        cfg["mc"]["N"] = args.n
    if getattr(args, "seed", None) is not None:
        cfg["mc"]["seed"] = args.seed
    for name in cfg["sequences"]:
        if name not in SEQUENCE_NAMES:
            raise ConfigError(f"unknown sequence {name!r}; choose from {SEQUENCE_NAMES}")
    if not cfg["sequences"]:
        raise ConfigError("no sequences selected")
    return cfg


def make_sequence(cfg, name):
    try:
        seq = build_sequence(name, float(cfg["theta"]), float(cfg["omega"]))
        ramp = float(cfg.get("ramp") or 0.0)
        return trapezoidalize(seq, ramp) if ramp > 0 else seq
    except SequenceError as exc:
        raise ConfigError(str(exc)) from None


def make_spectrum(cfg, knee_over_omega):
    if knee_over_omega is None:
        return None
    sp = cfg["spectrum"]
    try:
        knee = float(knee_over_omega) * float(cfg["omega"])
        if "A" in sp:
            return NoiseSpectrum(float(sp["A"]), float(sp["omega_min"]), knee, float(sp["omega_max"]),
                                 sp.get("convention", DEFAULT_CONVENTION))
        return NoiseSpectrum.from_total(float(sp["scale"]), knee, float(sp["omega_min"]),
                                        float(sp["omega_max"]), sp.get("convention", DEFAULT_CONVENTION))
    except (SpectrumError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad spectrum config: {exc}") from None


def knee_points(cfg):
    grids = cfg["omega_b"]
    a, d = grids.get("a"), grids.get("d")
    if a is None and d is None:
        raise ConfigError("omega_b grid is empty for both quadratures")
    for grid in (a, d):
        if grid is not None and len(grid) == 0:
            raise ConfigError("omega_b grid is empty")
    return list(itertools.product(a if a is not None else [None], d if d is not None else [None]))


def points(cfg):
    """Ordered (sequence name, knee_a, knee_d) work items."""
    knees = knee_points(cfg)
    return [(name, ka, kd) for name in cfg["sequences"] for ka, kd in knees]


def _pool_map(fn, items):
    threads = mcsim.default_threads()
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _writer(path):
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def _knee_rad(cfg, knee):
    return None if knee is None else float(knee) * float(cfg["omega"])


def run_ff(cfg, out) -> int:
    omega = float(cfg["omega"])
    ff_cfg = cfg["ff"]
    grid = filterfn.log_grid(float(ff_cfg["lo"]), float(ff_cfg["hi"]), int(ff_cfg["points_per_decade"]))
    band = [float(x) for x in ff_cfg["slope_band"]]
    if band[0] < grid[0] or band[1] > grid[-1]:
        raise ConfigError("slope band lies outside the frequency grid")
    status = 0
    fh_s, slopes = _writer(os.path.join(out, "ff_slopes.csv"))
    with fh_s:
        slopes.writerow(["sequence", "band_lo_over_Omega", "band_hi_over_Omega", "slope_a", "slope_d"])
        for name in cfg["sequences"]:
            seq = make_sequence(cfg, name)
            curve = filterfn.ff_curve(seq, grid * omega)
            fh, w = _writer(os.path.join(out, f"ff_{name}.csv"))
            with fh:
                w.writerow(["omega_over_Omega", "F_a", "F_d"])
                for x, fa, fd in zip(grid, curve.F_a, curve.F_d):
                    w.writerow([fmt(x), fmt(fa), fmt(fd)])
            row = [name, fmt(band[0]), fmt(band[1])]
            for q in ("a", "d"):
                try:
                    row.append(fmt(filterfn.lowfreq_slope(curve, q, (band[0] * omega, band[1] * omega))))
                except filterfn.DegenerateFitError as exc:
                    print(f"{name} {q}: {exc}", file=sys.stderr)
                    row.append("nan")
                    status = 2
            slopes.writerow(row)
    return status


def run_sweep(cfg, out) -> int:
    items = points(cfg)

    def work(item):
        name, ka, kd = item
        seq = make_sequence(cfg, name)
        try:
            est = analytic.combined_estimate(seq, make_spectrum(cfg, ka), make_spectrum(cfg, kd))
            return est.ff_loss, est.dc_loss, est.combined, "ok"
        except NUMERICAL_ERRORS as exc:
            return None, None, None, f"error: {exc}"

    results = _pool_map(work, items)
    status = 0
    fh, w = _writer(os.path.join(out, "sweep.csv"))
    with fh:
        w.writerow(["sequence", "omega_b_a", "omega_b_d", "ff_loss", "dc_loss", "combined", "status"])
        for (name, ka, kd), (ff, dc, comb, note) in zip(items, results):
            if note != "ok":
                status = 2
                print(f"{name} omega_b=({ka}, {kd}): {note}", file=sys.stderr)
            w.writerow([name, fmt(_knee_rad(cfg, ka)), fmt(_knee_rad(cfg, kd)), fmt(ff), fmt(dc), fmt(comb), note])
    return status


def run_mc(cfg, out) -> int:
    items = points(cfg)
    mc = cfg["mc"]
    n, seed = int(mc["N"]), int(mc["seed"])
    dt = None if mc.get("dt") is None else float(mc["dt"])
    if n < 2:
        raise ConfigError("mc.N must be at least 2")

    def work(item):
        name, ka, kd = item
        seq = make_sequence(cfg, name)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NyquistWarning)
            return mcsim.ensemble(seq, make_spectrum(cfg, ka), make_spectrum(cfg, kd), N=n, seed=seed,
                                  dt=dt, frozen=bool(mc.get("frozen", False)), threads=1)

    results = _pool_map(work, items)
    fh, w = _writer(os.path.join(out, "mc.csv"))
    with fh:
        w.writerow(["sequence", "omega_b_a", "omega_b_d", "N", "mean_loss", "std_error", "seed",
                    "clipped_variance_a", "clipped_variance_d"])
        for (name, ka, kd), r in zip(items, results):
            if any(c > 0 for c in r.clipped_power):
                print(f"{name} omega_b=({ka}, {kd}): noise above Nyquist {np.pi / r.dt:.4g} rad/s dropped, "
                      f"variance {r.clipped_power}", file=sys.stderr)
            w.writerow([name, fmt(_knee_rad(cfg, ka)), fmt(_knee_rad(cfg, kd)), r.N, fmt(r.mean_loss),
                        fmt(r.std_error), r.seed, fmt(r.clipped_power[0]), fmt(r.clipped_power[1])])
    return 0


def run_geometry(cfg, out) -> int:
    omega = float(cfg["omega"])
    freqs = [float(x) for x in cfg["geometry"]["omega_over_Omega"]]
    fh_s, summary = _writer(os.path.join(out, "geometry_summary.csv"))
    with fh_s:
        summary.writerow(["sequence", "static_defect", "path_length", "crossover_bound_over_Omega"])
        for name in cfg["sequences"]:
            seq = make_sequence(cfg, name)
            if not seq.is_square:
                raise ConfigError("geometry needs square segments (ramp = 0)")
            chains = [geometry.static_chain(seq)]
            for x in freqs:
                chains.extend(geometry.frequency_chains(seq, x * omega))
            geometry.write_chains_csv(os.path.join(out, f"chains_{name}.csv"), chains)
            bound = geometry.crossover_bound(seq) / omega if name != "primitive" else None
            summary.writerow([name, fmt(chains[0].defect), fmt(chains[0].path_length), fmt(bound)])
    return 0


def run_dc_fit(cfg, out) -> int:
    status = 0
    fh, w = _writer(os.path.join(out, "dc_fit.csv"))
    with fh:
        w.writerow(["sequence", "quadrature", "m", "c", "c_dimensionless", "residual"])
        for name in cfg["sequences"]:
            seq = make_sequence(cfg, name)
            for q in ("a", "d", "cross"):
                try:
                    fit = analytic.dc_coefficient(seq, q)
                except analytic.DcFitError as exc:
                    if q == "cross":
                        continue
                    print(f"{name} {q}: {exc}", file=sys.stderr)
                    status = 2
                    continue
                w.writerow([name, q, fit.m, fmt(fit.c), fmt(fit.dimensionless), fmt(fit.residual)])
    return status


COMMANDS = {"ff": run_ff, "sweep": run_sweep, "mc": run_mc, "geometry": run_geometry, "dc-fit": run_dc_fit}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cprobust", description="Composite-pulse robustness under colored noise.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [("ff", "filter-function curves and low-frequency slopes"),
                           ("sweep", "analytic, dc-limit and combined losses over knee grids"),
                           ("mc", "Monte Carlo ensembles over knee grids"),
                           ("geometry", "vector chains and crossover bounds"),
                           ("dc-fit", "slow-noise coefficients")]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seq", help="comma-separated sequence names")
        p.add_argument("--out", default="results", help="output directory (default: results)")
        if name in ("sweep", "mc"):
            p.add_argument("--omega-b", dest="omega_b", help="comma-separated knee frequencies in units of omega")
            p.add_argument("--quadrature", choices=("a", "d", "both"), help="noise quadratures for the knee grid")
        if name == "mc":
            p.add_argument("--n", type=int, help="number of realizations")
            p.add_argument("--seed", type=int, help="base seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
