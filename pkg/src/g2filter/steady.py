"""Stationary state of the full model, plus an explicit-integration route
used to cross-check it.

The direct solve replaces one row of the generator by the trace
constraint and factorises the resulting square system with pivoted LU.
Because the generator conserves the excitation difference between bra
and ket, elimination never mixes the (tiny) multi-photon amplitudes with
the O(1) vacuum entries, and photon numbers far below machine epsilon
come out with full relative accuracy.  :attr:`SteadyState.photon_scale`
records the expected photon-number magnitude so downstream code can
place definedness floors relative to it.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from scipy.integrate import solve_ivp
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DegenerateSteadyState, DimensionMismatch, NoConvergence, StepFailure, NegativeTime
from .liouvillian import LiouvillianMatrix, build_liouvillian, unvec, vec
from .operators import SystemOperators, build_system_operators
from .params import ModelParams

__all__ = [
    "SteadyState",
    "TruncationReport",
    "solve_steady",
    "steady_state",
    "evolve",
    "evolve_to_stationary",
    "check_density_matrix",
    "check_truncation",
    "trace_distance",
    "GAP_THRESHOLD",
]

log = logging.getLogger(__name__)

# uniqueness gate: second-smallest singular value relative to ||L||_2
GAP_THRESHOLD = 1e-8

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-10


@dataclass(frozen=True)
class SteadyState:
    rho: np.ndarray
    residual: float
    """``||L vec(rho)||_2`` against the unmodified generator."""
    generator_norm: float
    gap_ratio: float
    """Second-smallest over largest singular value of the generator."""
    photon_scale: float = 1.0

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @property
    def n_max(self) -> int:
        return self.dim // 2 - 1

    @property
    def relative_residual(self) -> float:
        return self.residual / self.generator_norm if self.generator_norm else 0.0


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    diff = np.asarray(rho) - np.asarray(sigma)
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())


def check_density_matrix(rho: np.ndarray, *, herm_tol=HERMITIAN_TOL, trace_tol=TRACE_TOL,
                         pos_tol=POSITIVITY_TOL) -> None:
    """Raise :class:`NoConvergence` unless ``rho`` is Hermitian, unit-trace and PSD."""
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    if herm > herm_tol:
        raise NoConvergence(f"density matrix not Hermitian (max deviation {herm:.3g})")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise NoConvergence(f"density matrix trace {tr:.15g} differs from 1")
    low = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    if low < -pos_tol:
        raise NoConvergence(f"density matrix has negative eigenvalue {low:.3g}")


def _photon_scale(p: ModelParams) -> float:
    from .meanfield import stationary_energy
    from .errors import G2FilterError

    if p.omega_rabi == 0 or p.gamma_pump == 0 or p.gamma_a == 0:
        return 1.0
    try:
        n_a = stationary_energy(p).n_a
    except G2FilterError:
        return 1.0
    return float(min(1.0, n_a)) if n_a > 0 else 1.0


def solve_steady(L: LiouvillianMatrix, p: ModelParams, *, check_gap: bool = True) -> SteadyState:
    """Unique stationary density matrix of the generator ``L``.

    Raises :class:`DegenerateSteadyState` when the null space of ``L`` is
    more than one-dimensional (singular-value gap below ``GAP_THRESHOLD``)
    and :class:`NoConvergence` when the residual or the density-matrix
    invariants are not met.
    """
    d = L.dim_rho
    gen = L.matrix
    if gen.shape != (d * d, d * d):
        raise DimensionMismatch("generator shape does not match dim_rho")

    if check_gap:
        sv = la.svdvals(gen)
        norm = float(sv[0])
        gap = float(sv[-2] / sv[0]) if sv[0] > 0 else 0.0
        if gap <= GAP_THRESHOLD:
            raise DegenerateSteadyState(
                f"second-smallest singular value {sv[-2]:.3g} <= {GAP_THRESHOLD:g} * ||L||")
    else:
        norm = float(np.linalg.norm(gen))
        gap = float("nan")

    trace_row = vec(np.eye(d))
    system = np.array(gen, dtype=complex)
    # row 0 is the |g,0><g,0| balance equation, redundant given trace
    # conservation
    system[0, :] = trace_row
    rhs = np.zeros(d * d, dtype=complex)
    rhs[0] = 1.0
    try:
        x = la.lu_solve(la.lu_factor(system, check_finite=False), rhs, check_finite=False)
    except (la.LinAlgError, ValueError) as exc:
        raise NoConvergence(f"LU solve failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise NoConvergence("steady-state solve produced non-finite entries")

    residual = float(np.linalg.norm(gen @ x))
    if residual > p.tol_steady * norm:
        raise NoConvergence(f"residual {residual:.3g} exceeds {p.tol_steady:g} * ||L|| = {p.tol_steady * norm:.3g}")

    rho = unvec(x, d)
    check_density_matrix(rho)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    return SteadyState(rho=rho, residual=residual, generator_norm=norm, gap_ratio=gap,
                       photon_scale=_photon_scale(p))


def steady_state(p: ModelParams, ops: SystemOperators | None = None, *,
                 check_gap: bool = True) -> SteadyState:
    """Build operators and generator for ``p`` and solve for the steady state."""
    if ops is None or ops.n_max != p.n_max:
        ops = build_system_operators(p.n_max)
    return solve_steady(build_liouvillian(p, ops), p, check_gap=check_gap)


def _invariant_blocks(gen: np.ndarray, support: np.ndarray) -> list[np.ndarray]:
    """Index sets of the invariant subspaces of ``gen`` that ``support`` touches."""
    graph = csr_matrix(gen != 0)
    _, labels = connected_components(graph, directed=True, connection="weak")
    active = np.unique(labels[support])
    return [np.flatnonzero(labels == lab) for lab in active]


def evolve(L: LiouvillianMatrix, rho0: np.ndarray, t_final: float, *,
           rtol: float = 1e-10, atol: float = 1e-13) -> np.ndarray:
    """Density matrix at ``t_final`` by adaptive explicit integration.

    Uses the Dormand-Prince 8(5,3) embedded pair.  The generator is first
    split into its invariant blocks (weakly connected components of its
    sparsity graph) and only the blocks populated by ``rho0`` are
    integrated; the result is identical to integrating the full space.
    """
    if t_final < 0:
        raise NegativeTime(f"t_final must be >= 0, got {t_final!r}")
    rho0 = np.asarray(rho0, dtype=complex)
    d = L.dim_rho
    if rho0.shape != (d, d):
        raise DimensionMismatch(f"rho0 has shape {rho0.shape}, expected {(d, d)}")
    y0 = vec(rho0)
    if t_final == 0:
        return rho0.copy()

    out = np.zeros_like(y0)
    for idx in _invariant_blocks(L.matrix, np.flatnonzero(y0)):
        block = np.ascontiguousarray(L.matrix[np.ix_(idx, idx)])
        sol = solve_ivp(lambda _t, y: block @ y, (0.0, float(t_final)), y0[idx],
                        method="DOP853", rtol=rtol, atol=atol)
        if sol.status != 0:
            raise StepFailure(f"integration failed: {sol.message}")
        out[idx] = sol.y[:, -1]

    rho = unvec(out, d)
    drift = abs(np.trace(rho) - np.trace(rho0))
    if drift > 1e-10:
        raise StepFailure(f"trace drifted by {drift:.3g} during integration")
    return rho


def evolve_to_stationary(L: LiouvillianMatrix, rho0: np.ndarray, *, rate_tol: float = 1e-12,
                         chunk: float = 1.0, t_limit: float = 1e4,
                         rtol: float = 1e-12, atol: float = 1e-14) -> tuple[np.ndarray, float]:
    """Integrate in chunks until ``||rho(t + chunk) - rho(t)|| / chunk < rate_tol``.

    Returns the final state and the time reached.
    """
    rho = np.asarray(rho0, dtype=complex)
    t = 0.0
    while t < t_limit:
        nxt = evolve(L, rho, chunk, rtol=rtol, atol=atol)
        t += chunk
        change = np.linalg.norm(nxt - rho) / chunk
        rho = nxt
        if change < rate_tol:
            return rho, t
    raise NoConvergence(f"state still changing after t = {t_limit:g}")


@dataclass(frozen=True)
class TruncationReport:
    n_max: int
    n_max_check: int
    value: float
    value_check: float
    abs_change: float
    rel_change: float
    converged: bool


Extractor = Callable[[SteadyState, SystemOperators, ModelParams], float]


def check_truncation(p: ModelParams, extractor: Extractor | str = "g2_full", *,
                     factor: int = 2, tol: float = 1e-6) -> TruncationReport:
    """Recompute a scalar observable at ``n_max`` and ``factor * n_max``.

    ``extractor`` is either a callable ``(state, ops, p) -> float`` or the
    name of a field of :class:`g2filter.observables.ObservableSet`.
    Converged means the absolute change is at most ``tol``.
    """
    if isinstance(extractor, str):
        from .observables import field_extractor
        extractor = field_extractor(extractor)

    values = []
    for n in (p.n_max, factor * p.n_max):
        q = p.replace(n_max=n)
        ops = build_system_operators(n)
        state = solve_steady(build_liouvillian(q, ops), q)
        values.append(float(extractor(state, ops, q)))
    v, w = values
    change = abs(w - v)
    rel = change / abs(w) if w != 0 else (0.0 if change == 0 else float("inf"))
    report = TruncationReport(p.n_max, factor * p.n_max, v, w, change, rel, change <= tol)
    if not report.converged:
        log.warning("truncation not converged: n_max %d -> %d changes value by %.3g",
                    report.n_max, report.n_max_check, change)
    return report
