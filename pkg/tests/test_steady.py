import math

import numpy as np
import pytest

from g2filter.errors import DegenerateSteadyState, NegativeTime
from g2filter.liouvillian import apply_generator, build_liouvillian
from g2filter.observables import compute_observables
from g2filter.operators import basis_index
from g2filter.params import ModelParams
from g2filter.steady import (
    HERMITIAN_TOL,
    POSITIVITY_TOL,
    check_truncation,
    evolve,
    evolve_to_stationary,
    solve_steady,
    steady_state,
    trace_distance,
)

from conftest import random_density


def _projector(dim, idx):
    rho = np.zeros((dim, dim), dtype=complex)
    rho[idx, idx] = 1
    return rho


def test_no_pump_gives_vacuum(ops8):
    st = steady_state(ModelParams(gamma_pump=0.0), ops8)
    assert trace_distance(st.rho, _projector(18, 0)) < 1e-12


def test_uncoupled_emitter_balance(ops8):
    p = ModelParams(omega_rabi=0.0)
    obs = compute_observables(steady_state(p, ops8), p, ops8)
    assert obs.n_sigma == pytest.approx(1 / 11, rel=1e-12)
    assert obs.n_a == 0.0


@pytest.fixture(scope="module")
def unit_point(ops8):
    p = ModelParams(gamma_a=1.0, omega_rabi=1.0)
    gen = build_liouvillian(p, ops8)
    return p, gen, solve_steady(gen, p)


def test_residual_and_invariants(unit_point):
    p, gen, st = unit_point
    assert np.linalg.norm(apply_generator(gen, st.rho)) <= p.tol_steady * st.generator_norm
    assert np.abs(st.rho - st.rho.conj().T).max() <= HERMITIAN_TOL
    assert abs(np.trace(st.rho) - 1) <= 1e-12
    assert np.linalg.eigvalsh(st.rho).min() >= -POSITIVITY_TOL


def test_matches_long_time_integration(unit_point, ops8):
    p, gen, st = unit_point
    rho, t = evolve_to_stationary(gen, _projector(18, 0))
    assert trace_distance(rho, st.rho) < 1e-8
    ref = compute_observables(st, p, ops8)
    n_a = np.trace(rho @ ops8.n_a_op).real
    n_s = np.trace(rho @ ops8.n_sigma_op).real
    flow = np.trace(rho @ ops8.flow_op).real
    assert (n_a, n_s, flow) == pytest.approx((ref.n_a, ref.n_sigma, ref.J), rel=1e-6)


def test_fixed_point_independent_of_initial_state(unit_point):
    _, gen, st = unit_point
    excited_two_photons = _projector(18, basis_index(1, 2, 8))
    rho, _ = evolve_to_stationary(gen, excited_two_photons)
    assert trace_distance(rho, st.rho) < 1e-8


def test_degenerate_generator_rejected(ops8):
    # no dissipation except dephasing: populations never relax
    p = ModelParams(gamma_diss=1e-30, gamma_pump=0.0, gamma_a=0.0, omega_rabi=0.0)
    with pytest.raises(DegenerateSteadyState):
        steady_state(p, ops8)


def test_evolve_zero_time(ops8):
    gen = build_liouvillian(ModelParams(), ops8)
    rho0 = _projector(18, 3)
    assert np.array_equal(evolve(gen, rho0, 0.0), rho0)


def test_evolve_decay_law(ops8):
    p = ModelParams(gamma_pump=0, gamma_deph=0, gamma_a=0, omega_rabi=0)
    e = basis_index(1, 0, 8)
    rho = evolve(build_liouvillian(p, ops8), _projector(18, e), 1.0)
    assert rho[e, e].real == pytest.approx(math.exp(-1), abs=1e-8)


def test_evolve_negative_time(ops8):
    with pytest.raises(NegativeTime):
        evolve(build_liouvillian(ModelParams(), ops8), _projector(18, 0), -1.0)


def test_evolve_preserves_trace(ops8, rng):
    gen = build_liouvillian(ModelParams(gamma_a=5.0, omega_rabi=30.0), ops8)
    rho = evolve(gen, random_density(rng, 18), 0.3)
    assert abs(np.trace(rho) - 1) < 1e-10


def test_truncation_converged_at_defaults():
    rep = check_truncation(ModelParams(gamma_a=1.0, omega_rabi=1.0))
    assert rep.n_max_check == 16
    assert rep.abs_change < 1e-6 and rep.converged


def test_truncation_trivial_without_pump():
    rep = check_truncation(ModelParams(gamma_pump=0.0, gamma_a=1.0, omega_rabi=1.0), "n_a")
    assert rep.abs_change == 0.0 and rep.converged


def test_truncation_flags_single_photon_cutoff():
    # heavy pump into a good cavity fills several photons
    p = ModelParams(gamma_pump=50.0, gamma_deph=0.0, gamma_a=0.1, omega_rabi=50.0, n_max=1)
    rep = check_truncation(p, "n_a", factor=2, tol=1e-6)
    assert not rep.converged


def test_top_fock_population_small(ops8):
    from g2filter.observables import top_fock_population

    for ga, om in [(1.0, 1.0), (1e3, 1e3), (1e5, 1e3), (0.1, 1e4)]:
        p = ModelParams(gamma_a=ga, omega_rabi=om)
        assert top_fock_population(steady_state(p, ops8).rho, ops8) < 1e-8
