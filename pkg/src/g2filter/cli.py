"""Command-line interface.

Commands
--------
steady   full-model observables at one parameter point (JSON)
sweep    grid of g2 values and regimes (CSV)
kernel   memory kernel samples with an integral check (CSV)
compare  locate the largest full/effective discrepancy on a grid (JSON)

Configuration is a flat JSON object; command-line flags override it.
Exit codes: 0 ok, 2 configuration error, 3 solver error, 4 I/O error.
Errors are reported as a single JSON line on stderr.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import time

import numpy as np

from .effective import g2_eff, g2_neglect, kernel_integral, kernel_integral_numeric, kernel_tmax, kernel_values
from .errors import ConfigError, G2FilterError, MissingKey, SolverError, UnknownKey
from .liouvillian import apply_generator, build_liouvillian
from .meanfield import write_series_csv
from .observables import compute_observables
from .operators import build_system_operators
from .params import PARAM_KEYS, classify_regime, validate_params
from .steady import solve_steady
from . import sweep as sweep_mod

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

OPTION_KEYS = ("out", "workers", "t_max", "samples", "input", "format")
CONFIG_KEYS = PARAM_KEYS + OPTION_KEYS

DEFAULT_GAMMA_A_SPEC = "1e-1:1e6:60log"
DEFAULT_OMEGA_SPEC = "1e-1:1e4:60log"
DEFAULT_SAMPLES = 1001


class CliIOError(G2FilterError):
    pass


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise CliIOError(f"cannot read config {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a flat JSON object")
    unknown = sorted(set(raw) - set(CONFIG_KEYS))
    if unknown:
        raise UnknownKey(f"unknown config key(s): {', '.join(unknown)}")
    for k, v in raw.items():
        if isinstance(v, (dict, list)):
            raise ConfigError(f"config key {k!r} must be a scalar")
    return raw


def _merge(args) -> dict:
    cfg = _load_config(args.config)
    overrides = {
        "gamma_a": args.gamma_a,
        "omega_rabi": args.omega,
        "n_max": args.nmax,
        "out": args.out,
        "workers": getattr(args, "workers", None),
        "t_max": getattr(args, "tmax", None),
        "samples": getattr(args, "samples", None),
        "input": getattr(args, "input", None),
        "format": getattr(args, "format", None),
    }
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return cfg


def _point_params(cfg: dict):
    for key in ("gamma_a", "omega_rabi"):
        if key not in cfg:
            raise MissingKey(f"missing required key {key!r}")
    raw = {k: cfg[k] for k in PARAM_KEYS if k in cfg}
    for key in ("gamma_a", "omega_rabi"):
        try:
            raw[key] = float(raw[key])
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be a number, got {raw[key]!r}") from None
    return validate_params(raw)


def _grid_from(cfg: dict) -> "sweep_mod.SweepGrid":
    axes = {}
    for key, default in (("gamma_a", DEFAULT_GAMMA_A_SPEC), ("omega_rabi", DEFAULT_OMEGA_SPEC)):
        val = cfg.get(key, default)
        if isinstance(val, str):
            try:
                val = float(val)
            except ValueError:
                axes[key] = sweep_mod.parse_axis(val)
                continue
        axes[key] = np.array([float(val)])
    raw = {k: cfg[k] for k in PARAM_KEYS if k in cfg and k not in ("gamma_a", "omega_rabi")}
    unit = float(raw.get("gamma_diss", 1.0))
    base = validate_params(raw)
    if unit > 0 and unit != 1.0:
        axes = {k: v / unit for k, v in axes.items()}
    return sweep_mod.SweepGrid(axes["gamma_a"], axes["omega_rabi"], base)


def _workers(cfg: dict) -> int:
    w = cfg.get("workers")
    if w is None:
        return os.cpu_count() or 1
    try:
        w = int(w)
    except (TypeError, ValueError):
        raise ConfigError(f"workers must be an integer, got {w!r}") from None
    if w < 1:
        raise ConfigError("workers must be >= 1")
    return w


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliIOError(f"cannot write {out!r}: {exc.strerror}") from None


def _closed(fn, p, reasons, key):
    try:
        return fn(p)
    except G2FilterError as exc:
        reasons[key] = str(exc)
        return None


def cmd_steady(cfg: dict) -> dict:
    p = _point_params(cfg)
    ops = build_system_operators(p.n_max)
    gen = build_liouvillian(p, ops)
    state = solve_steady(gen, p)
    obs = compute_observables(state, p, ops)
    reasons = {}
    report = {
        "n_a": obs.n_a,
        "n_sigma": obs.n_sigma,
        "J": obs.J,
        "beta": obs.beta,
        "g2_full": obs.g2_full,
        "g2_eff": _closed(g2_eff, p, reasons, "g2_eff"),
        "g2_neglect": _closed(g2_neglect, p, reasons, "g2_neglect"),
        "regime": classify_regime(p).value,
        "n_max_used": p.n_max,
        "residual": float(np.linalg.norm(apply_generator(gen, state.rho))),
    }
    if obs.g2_reason:
        reasons["g2_full"] = obs.g2_reason
    if obs.beta_reason:
        reasons["beta"] = obs.beta_reason
    report["reasons"] = reasons
    _emit(json.dumps(report, indent=2) + "\n", cfg.get("out"))
    return report


def cmd_sweep(cfg: dict) -> list:
    grid = _grid_from(cfg)
    workers = _workers(cfg)
    fmt = cfg.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    out = cfg.get("out")
    if out is not None:
        # fail on an unwritable path before spending time on the grid
        try:
            open(out, "a").close()
        except OSError as exc:
            raise CliIOError(f"cannot write {out!r}: {exc.strerror}") from None
    start = time.perf_counter()
    records = sweep_mod.run_sweep(grid, workers=workers)
    wall = time.perf_counter() - start
    buf = io.StringIO()
    (sweep_mod.write_csv if fmt == "csv" else sweep_mod.write_json)(records, buf)
    _emit(buf.getvalue(), out)
    summary = {"points": len(records), "failures": sum(r.failed for r in records),
               "wall_time_s": round(wall, 3)}
    sys.stderr.write(json.dumps(summary) + "\n")
    return records


def cmd_kernel(cfg: dict) -> tuple:
    p = _point_params(cfg)
    t_max = cfg.get("t_max")
    samples = cfg.get("samples", DEFAULT_SAMPLES)
    try:
        t_max = kernel_tmax(p) if t_max is None else float(t_max)
        samples = int(samples)
    except (TypeError, ValueError):
        raise ConfigError("t_max must be a number and samples an integer") from None
    if not (math.isfinite(t_max) and t_max > 0):
        raise ConfigError(f"t_max must be > 0, got {t_max!r}")
    if samples < 2:
        raise ConfigError(f"samples must be >= 2, got {samples!r}")
    t = np.linspace(0.0, t_max, samples)
    k = kernel_values(p, t)
    numeric = kernel_integral_numeric(p)
    closed = kernel_integral(p)
    rel = abs(numeric - closed) / abs(closed)
    footer = [f"integral_numeric={numeric:.17g}, integral_closed={closed:.17g}, rel_error={rel:.3e}"]
    buf = io.StringIO()
    write_series_csv(buf, t, k, columns=("t", "K"), footer=footer)
    _emit(buf.getvalue(), cfg.get("out"))
    return t, k, numeric, closed


def cmd_compare(cfg: dict) -> dict:
    if cfg.get("input"):
        try:
            records = sweep_mod.read_csv(cfg["input"])
        except OSError as exc:
            raise CliIOError(f"cannot read {cfg['input']!r}: {exc.strerror}") from None
        grid_base = _grid_from({k: v for k, v in cfg.items() if k not in ("gamma_a", "omega_rabi")}).base
    else:
        grid = _grid_from(cfg)
        grid_base = grid.base
        records = sweep_mod.run_sweep(grid, workers=_workers(cfg))
    report = sweep_mod.compare_maps(records, grid_base).as_dict()
    _emit(json.dumps(report, indent=2) + "\n", cfg.get("out"))
    return report


COMMANDS = {"steady": cmd_steady, "sweep": cmd_sweep, "kernel": cmd_kernel, "compare": cmd_compare}


class _Parser(argparse.ArgumentParser):
    """Argument errors become ConfigError so they share the JSON error path."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="g2filter", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat JSON config file")
    common.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    common.add_argument("--gamma-a", metavar="SPEC", help="cavity linewidth, or grid spec min:max:count(log|lin)")
    common.add_argument("--omega", metavar="SPEC", help="coupling strength, or grid spec")
    common.add_argument("--nmax", metavar="N", type=int, help="Fock truncation")
    grid = _Parser(add_help=False)
    grid.add_argument("--workers", metavar="N", type=int, help="worker processes (default: CPU count)")

    sub.add_parser("steady", parents=[common], help="full-model observables at one point")
    sp = sub.add_parser("sweep", parents=[common, grid], help="g2 maps over a grid")
    sp.add_argument("--format", choices=("csv", "json"))
    kp = sub.add_parser("kernel", parents=[common], help="memory kernel samples")
    kp.add_argument("--tmax", metavar="X", type=float, help="last sample time (default: envelope rule)")
    kp.add_argument("--samples", metavar="N", type=int, help=f"number of samples (default {DEFAULT_SAMPLES})")
    cp = sub.add_parser("compare", parents=[common, grid], help="largest full/effective discrepancy")
    cp.add_argument("--input", metavar="CSV", help="reuse a sweep CSV instead of recomputing")
    return parser


def _fail(exc: BaseException, code: int) -> int:
    msg = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(msg) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG)
    try:
        cfg = _merge(args)
        COMMANDS[args.command](cfg)
    except CliIOError as exc:
        return _fail(exc, EXIT_IO)
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG)
    except SolverError as exc:
        return _fail(exc, EXIT_SOLVER)
    except G2FilterError as exc:
        return _fail(exc, EXIT_SOLVER)
    except OSError as exc:
        return _fail(exc, EXIT_IO)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
