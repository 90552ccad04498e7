"""Parameter grids over cavity linewidth and coupling strength.

Every grid point is an independent full-model solve plus the two closed
forms.  Points are evaluated in any order (optionally in worker
processes) and gathered back by index, so the output never depends on the
schedule.
"""

from __future__ import annotations

import csv
import json
import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from functools import lru_cache

import numpy as np

from .effective import g2_eff, g2_neglect
from .errors import EmptyInput, G2FilterError, GridSpecError
from .meanfield import stationary_energy
from .observables import compute_observables, top_fock_population
from .operators import build_system_operators
from .params import ModelParams, Regime, classify_regime, is_strong
from .steady import steady_state

__all__ = [
    "QUANTITIES",
    "CSV_COLUMNS",
    "parse_axis",
    "SweepGrid",
    "SweepRecord",
    "run_sweep",
    "evaluate_point",
    "write_csv",
    "read_csv",
    "write_json",
    "DiscrepancyReport",
    "compare_maps",
]

QUANTITIES = frozenset({"g2_full", "g2_eff", "g2_neglect", "beta"})
CSV_COLUMNS = ("gamma_a", "omega", "g2_full", "g2_eff", "g2_neglect", "beta", "regime", "rel_diff")

_AXIS_RE = re.compile(r"^\s*([^:]+):([^:]+):(\d+)\s*(log|lin)\s*$")


def parse_axis(spec: str) -> np.ndarray:
    """Expand ``"min:max:count(log|lin)"`` into an increasing array.

    ``count == 1`` needs ``min == max``.  Log axes need ``min > 0``.
    """
    m = _AXIS_RE.match(str(spec))
    if not m:
        raise GridSpecError(f"grid spec {spec!r} is not of the form min:max:count(log|lin)")
    try:
        lo, hi = float(m.group(1)), float(m.group(2))
    except ValueError:
        raise GridSpecError(f"grid spec {spec!r} has non-numeric bounds") from None
    count, kind = int(m.group(3)), m.group(4)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise GridSpecError(f"grid spec {spec!r} has non-finite bounds")
    if count < 1:
        raise GridSpecError(f"grid spec {spec!r} needs count >= 1")
    if count == 1:
        if lo != hi:
            raise GridSpecError(f"grid spec {spec!r}: a single point needs min == max")
    elif not lo < hi:
        raise GridSpecError(f"grid spec {spec!r} is not increasing")
    if lo < 0:
        raise GridSpecError(f"grid spec {spec!r} has a negative rate")
    if kind == "log":
        if lo <= 0:
            raise GridSpecError(f"log grid spec {spec!r} needs min > 0")
        axis = np.geomspace(lo, hi, count) if count > 1 else np.array([lo])
    else:
        axis = np.linspace(lo, hi, count)
    # pin the end points exactly so the requested bounds appear verbatim
    axis[0], axis[-1] = lo, hi
    return axis


def _as_axis(values) -> np.ndarray:
    if isinstance(values, str):
        return parse_axis(values)
    axis = np.atleast_1d(np.asarray(values, dtype=float))
    if axis.ndim != 1 or axis.size < 1:
        raise GridSpecError("axis must be a non-empty 1-d sequence")
    if np.any(np.diff(axis) <= 0):
        raise GridSpecError("axis must be strictly increasing")
    if np.any(axis < 0) or not np.all(np.isfinite(axis)):
        raise GridSpecError("axis values must be finite and >= 0")
    return axis


@dataclass(frozen=True)
class SweepGrid:
    """Rectangular grid in ``(gamma_a, omega_rabi)`` around ``base``.

    Axes accept spec strings or sequences.  The default spans the weak,
    strong-incoherent and bad-cavity regimes on a 60 x 60 log grid.
    """

    gamma_a_axis: np.ndarray = field(default_factory=lambda: parse_axis("1e-1:1e6:60log"))
    omega_axis: np.ndarray = field(default_factory=lambda: parse_axis("1e-1:1e4:60log"))
    base: ModelParams = field(default_factory=ModelParams)

    def __post_init__(self):
        object.__setattr__(self, "gamma_a_axis", _as_axis(self.gamma_a_axis))
        object.__setattr__(self, "omega_axis", _as_axis(self.omega_axis))

    @property
    def shape(self) -> tuple[int, int]:
        return self.gamma_a_axis.size, self.omega_axis.size

    def points(self) -> list[tuple[float, float]]:
        """Row-major over ``gamma_a`` (outer) then ``omega`` (inner)."""
        return [(float(ga), float(om)) for ga in self.gamma_a_axis for om in self.omega_axis]

    def params_at(self, gamma_a: float, omega: float) -> ModelParams:
        return self.base.replace(gamma_a=gamma_a, omega_rabi=omega)


@dataclass(frozen=True)
class SweepRecord:
    """One grid point.  ``None`` marks an undefined value; ``reasons``
    says why, keyed by field name."""

    gamma_a: float
    omega: float
    g2_full: float | None
    g2_eff: float | None
    g2_neglect: float | None
    beta: float | None
    regime: str
    rel_diff: float | None
    n_a: float | None = None
    n_sigma: float | None = None
    n_sigma_meanfield: float | None = None
    top_fock: float | None = None
    reasons: dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return "error" in self.reasons

    def as_dict(self) -> dict:
        return asdict(self)


def _closed_form(fn, p, reasons, key):
    try:
        return float(fn(p))
    except G2FilterError as exc:
        reasons[key] = str(exc)
        return None


@lru_cache(maxsize=8)
def _operators(n_max: int):
    return build_system_operators(n_max)


def evaluate_point(p: ModelParams, quantities=QUANTITIES) -> SweepRecord:
    """Compute one record; errors are recorded, never raised."""
    quantities = frozenset(quantities)
    reasons: dict = {}
    regime = classify_regime(p).value
    ge = _closed_form(g2_eff, p, reasons, "g2_eff") if "g2_eff" in quantities else None
    gn = _closed_form(g2_neglect, p, reasons, "g2_neglect") if "g2_neglect" in quantities else None
    g2 = beta = n_a = n_s = top = n_mf = None
    if quantities & {"g2_full", "beta"}:
        ops = _operators(p.n_max)
        try:
            state = steady_state(p, ops)
        except G2FilterError as exc:
            reasons["error"] = f"{type(exc).__name__}: {exc}"
        else:
            obs = compute_observables(state, p, ops)
            n_a, n_s = obs.n_a, obs.n_sigma
            top = top_fock_population(state.rho, ops)
            if "g2_full" in quantities:
                g2 = obs.g2_full
                if obs.g2_reason:
                    reasons["g2_full"] = obs.g2_reason
            if "beta" in quantities:
                beta = obs.beta
                if obs.beta_reason:
                    reasons["beta"] = obs.beta_reason
    try:
        n_mf = stationary_energy(p).n_sigma
    except G2FilterError:
        pass
    rel = None
    if g2 is not None and ge is not None and g2 > 0:
        rel = abs(g2 - ge) / g2
    return SweepRecord(gamma_a=p.gamma_a, omega=p.omega_rabi, g2_full=g2, g2_eff=ge,
                       g2_neglect=gn, beta=beta, regime=regime, rel_diff=rel, n_a=n_a,
                       n_sigma=n_s, n_sigma_meanfield=n_mf, top_fock=top, reasons=reasons)


def _task(args):
    return evaluate_point(*args)


def run_sweep(grid: SweepGrid, quantities=QUANTITIES, *, workers: int | None = 1) -> list[SweepRecord]:
    """Evaluate every grid point; records come back in row-major order.

    ``workers`` > 1 uses a process pool; ``None`` means one per CPU.
    """
    quantities = frozenset(quantities)
    unknown = quantities - QUANTITIES
    if unknown:
        raise GridSpecError(f"unknown quantities: {sorted(unknown)}")
    tasks = [(grid.params_at(ga, om), quantities) for ga, om in grid.points()]
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(tasks) <= 1:
        return [_task(t) for t in tasks]
    results: list[SweepRecord | None] = [None] * len(tasks)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, len(tasks) // (8 * workers))
        # map preserves submission order, so index i is always point i
        for i, rec in enumerate(pool.map(_task, tasks, chunksize=chunk)):
            results[i] = rec
    return results


# -- export ------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return repr(float(x))


def write_csv(records, target) -> None:
    """CSV with the fixed header; floats as shortest round-trip decimals."""
    own = isinstance(target, (str, os.PathLike))
    fh = open(target, "w", newline="") if own else target
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    finally:
        if own:
            fh.close()


def read_csv(source) -> list[SweepRecord]:
    """Read records written by :func:`write_csv` (extra fields left unset)."""
    own = isinstance(source, (str, os.PathLike))
    fh = open(source, newline="") if own else source
    try:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != CSV_COLUMNS:
            raise GridSpecError(f"unexpected CSV header {header!r}")
        records = []
        for row in reader:
            if not row or row[0].startswith("#"):
                continue
            vals = dict(zip(CSV_COLUMNS, row))
            num = {k: (float(v) if v != "" else None) for k, v in vals.items() if k != "regime"}
            records.append(SweepRecord(regime=vals["regime"], **num))
        return records
    finally:
        if own:
            fh.close()


def write_json(records, target) -> None:
    rows = [{c: getattr(r, c) for c in CSV_COLUMNS} | {"reasons": r.reasons} for r in records]
    text = json.dumps(rows, indent=1)
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w") as fh:
            fh.write(text + "\n")
    else:
        target.write(text + "\n")


# -- discrepancy map -----------------------------------------------------------

@dataclass(frozen=True)
class DiscrepancyReport:
    """Where the full model and the effective emitter disagree most."""

    gamma_a: float
    omega: float
    max_rel_diff: float
    beta: float | None
    regime: str
    strong_coupling: bool
    incoherent: bool
    points_compared: int

    @property
    def in_target_region(self) -> bool:
        return self.strong_coupling and self.incoherent

    def as_dict(self) -> dict:
        return asdict(self) | {"in_target_region": self.in_target_region}


def compare_maps(records, base: ModelParams | None = None) -> DiscrepancyReport:
    """Locate the arg-max of ``rel_diff`` and classify its regime.

    ``base`` supplies the rates other than ``gamma_a``/``omega`` used to
    re-derive the regime flags (defaults if omitted).  Ties keep the first
    point in grid order.
    """
    usable = [r for r in records if r.rel_diff is not None and math.isfinite(r.rel_diff)]
    if not usable:
        raise EmptyInput("no record carries a defined rel_diff")
    base = base or ModelParams()
    best = usable[int(np.argmax([r.rel_diff for r in usable]))]
    p = base.replace(gamma_a=best.gamma_a, omega_rabi=best.omega)
    regime = classify_regime(p)
    return DiscrepancyReport(
        gamma_a=best.gamma_a,
        omega=best.omega,
        max_rel_diff=best.rel_diff,
        beta=best.beta,
        regime=regime.value,
        strong_coupling=is_strong(p),
        incoherent=regime is not Regime.COHERENT,
        points_compared=len(usable),
    )
