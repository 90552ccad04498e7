"""Scalar observables of a steady state: photon number, emitter
population, energy flow, efficiency and zero-delay g2 of the cavity field.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .errors import DimensionMismatch, InsufficientPhotons, UndefinedEfficiency, UndefinedObservable
from .operators import SystemOperators
from .params import ModelParams

__all__ = [
    "ObservableSet",
    "MIN_PHOTONS",
    "MIN_EXCITATION",
    "expectation",
    "g2_full",
    "beta_efficiency",
    "compute_observables",
    "top_fock_population",
    "field_extractor",
]

# definedness floors; MIN_PHOTONS is applied relative to the steady
# state's photon_scale in compute_observables
MIN_PHOTONS = 1e-14
MIN_EXCITATION = 1e-14


def expectation(rho: np.ndarray, op: np.ndarray) -> complex:
    rho = np.asarray(rho)
    op = np.asarray(op)
    if rho.shape != op.shape or rho.ndim != 2:
        raise DimensionMismatch(f"rho {rho.shape} and operator {op.shape} are incompatible")
    # tr(rho @ op) without forming the product
    return complex(np.einsum("ij,ji->", rho, op))


def g2_full(rho: np.ndarray, ops: SystemOperators, *, min_photons: float = MIN_PHOTONS) -> float:
    """``<a+ a+ a a> / <a+ a>^2`` of the cavity field."""
    n_a = expectation(rho, ops.n_a_op).real
    if not n_a >= min_photons:
        raise InsufficientPhotons(f"<a+a> = {n_a:.3g} below {min_photons:.3g}")
    pairs = expectation(rho, ops.a_dag @ ops.a_dag @ ops.a @ ops.a).real
    return max(pairs, 0.0) / (n_a * n_a)


def beta_efficiency(rho: np.ndarray, p: ModelParams, ops: SystemOperators, *,
                    min_excitation: float = MIN_EXCITATION) -> float:
    """Energy transfer into the cavity relative to the emitter's own loss."""
    n_sigma = expectation(rho, ops.n_sigma_op).real
    if not n_sigma > min_excitation:
        raise UndefinedEfficiency(f"<s+s> = {n_sigma:.3g} below {min_excitation:.3g}")
    flow = expectation(rho, ops.flow_op).real
    return p.omega_rabi * flow / (p.gamma_diss * n_sigma)


def top_fock_population(rho: np.ndarray, ops: SystemOperators) -> float:
    """Population of the highest retained photon number (truncation guard)."""
    diag = np.real(np.diag(rho))
    return float(diag[ops.fock_index == ops.n_max].sum())


@dataclass(frozen=True)
class ObservableSet:
    n_a: float
    n_sigma: float
    J: float
    beta: float | None
    g2_full: float | None
    g2_reason: str | None = None
    beta_reason: str | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def compute_observables(state, p: ModelParams, ops: SystemOperators) -> ObservableSet:
    """All observables of a :class:`g2filter.steady.SteadyState`.

    Undefined ratios are reported as ``None`` with a reason instead of
    raising.
    """
    rho = state.rho
    n_a = expectation(rho, ops.n_a_op).real
    n_sigma = expectation(rho, ops.n_sigma_op).real
    flow = expectation(rho, ops.flow_op).real
    g2 = beta = None
    g2_reason = beta_reason = None
    try:
        g2 = g2_full(rho, ops, min_photons=MIN_PHOTONS * state.photon_scale)
    except UndefinedObservable as exc:
        g2_reason = exc.reason
    if p.omega_rabi == 0:
        beta = 0.0
    else:
        try:
            beta = beta_efficiency(rho, p, ops)
        except UndefinedObservable as exc:
            beta_reason = exc.reason
    return ObservableSet(n_a=n_a, n_sigma=n_sigma, J=flow, beta=beta, g2_full=g2,
                         g2_reason=g2_reason, beta_reason=beta_reason)


def field_extractor(name: str):
    """Extractor ``(state, ops, p) -> float`` returning one ObservableSet field.

    Raises the underlying :class:`UndefinedObservable` when the field is
    undefined, so convergence checks never compare sentinels.
    """
    fields = {"n_a", "n_sigma", "J", "beta", "g2_full"}
    if name not in fields:
        raise KeyError(f"unknown observable {name!r}; choose from {sorted(fields)}")

    def extract(state, ops, p):
        if name == "g2_full":
            return g2_full(state.rho, ops, min_photons=MIN_PHOTONS * state.photon_scale)
        if name == "beta":
            return beta_efficiency(state.rho, p, ops) if p.omega_rabi else 0.0
        return getattr(compute_observables(state, p, ops), name)

    return extract
