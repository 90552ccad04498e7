"""Photon statistics of a pumped two-level emitter filtered by a cavity.

Three routes to the zero-delay autocorrelation of the cavity output are
provided: the full master-equation model, an effective-emitter closed
form that folds the cavity back-action into renormalised rates, and the
plain Lorentzian-filter formula that ignores back-action.
"""

from .params import ModelParams, Regime, classify_regime, coupling_eigenvalues, validate_params
from .operators import SystemOperators, build_hamiltonian, build_system_operators
from .liouvillian import LiouvillianMatrix, apply_generator, build_liouvillian
from .steady import SteadyState, check_truncation, evolve, solve_steady, steady_state
from .observables import ObservableSet, beta_efficiency, compute_observables, expectation, g2_full
from .effective import (
    EffectiveRates,
    effective_rates,
    filter_transmission,
    g2_eff,
    g2_neglect,
    kernel_K,
    kernel_integral,
    nsigma_markov_stationary,
)
from .meanfield import (
    AmplitudeState,
    EnergyState,
    evolve_amplitudes,
    evolve_energy,
    evolve_nsigma_volterra,
    stationary_energy,
)

__all__ = [
    "EffectiveRates",
    "effective_rates",
    "filter_transmission",
    "g2_eff",
    "g2_neglect",
    "kernel_K",
    "kernel_integral",
    "nsigma_markov_stationary",
    "AmplitudeState",
    "EnergyState",
    "evolve_amplitudes",
    "evolve_energy",
    "evolve_nsigma_volterra",
    "stationary_energy",
    "ModelParams",
    "Regime",
    "classify_regime",
    "coupling_eigenvalues",
    "validate_params",
    "SystemOperators",
    "build_hamiltonian",
    "build_system_operators",
    "LiouvillianMatrix",
    "apply_generator",
    "build_liouvillian",
    "SteadyState",
    "check_truncation",
    "evolve",
    "solve_steady",
    "steady_state",
    "ObservableSet",
    "beta_efficiency",
    "compute_observables",
    "expectation",
    "g2_full",
]

__version__ = "0.1.0"
