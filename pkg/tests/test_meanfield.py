import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import solve_ivp

from g2filter.effective import nsigma_markov_stationary
from g2filter.errors import ConfigError, NegativeTime, SingularSystem, StepTooLarge
from g2filter.meanfield import (
    AmplitudeState,
    EnergyState,
    energy_system,
    evolve_amplitudes,
    evolve_energy,
    evolve_nsigma_volterra,
    nsigma_markov_trajectory,
    stationary_energy,
    volterra_dominant_rate,
    write_series_csv,
)
from g2filter.params import ModelParams, Regime, classify_regime, coupling_eigenvalues


def _grid(p, t_final, fraction=0.5):
    h = fraction * 0.1 / volterra_dominant_rate(p)
    n = int(math.ceil(t_final / h))
    return np.linspace(0.0, n * h, n + 1)


# -- amplitudes ----------------------------------------------------------------

def test_amplitudes_uncoupled():
    p = ModelParams(omega_rabi=0.0, gamma_deph=2.0)
    s = evolve_amplitudes(p, AmplitudeState(0, 1), 0.7)
    assert s.a == 0
    assert s.sigma == pytest.approx(math.exp(-p.dipole_rate * 0.7), rel=1e-13)


def test_amplitudes_identity_at_zero():
    s0 = AmplitudeState(0.3 - 0.1j, 0.8j)
    assert evolve_amplitudes(ModelParams(gamma_a=2.0, omega_rabi=5.0), s0, 0.0) == s0


def test_amplitudes_negative_time():
    with pytest.raises(NegativeTime):
        evolve_amplitudes(ModelParams(), AmplitudeState(0, 1), -1.0)


def _amplitude_ode(p, s0, t):
    m = np.array([[-p.gamma_a / 2, -1j * p.omega_rabi], [-1j * p.omega_rabi, -p.dipole_rate]])
    sol = solve_ivp(lambda _t, x: m @ x, (0, t), np.array([s0.a, s0.sigma], dtype=complex),
                    method="DOP853", rtol=1e-13, atol=1e-16)
    return sol.y[:, -1]


@pytest.mark.parametrize("ga,om,deph", [(1.0, 3.0, 1.0), (4.0, 0.9, 1.0), (1.0, 1.0, 1e4), (2.0, 0.525, 0.0)])
@pytest.mark.parametrize("t", [0.05, 0.8, 3.0])
def test_amplitudes_against_step_integration(ga, om, deph, t):
    p = ModelParams(gamma_a=ga, omega_rabi=om, gamma_deph=deph, gamma_pump=0.0)
    s0 = AmplitudeState(0.2, 0.9 + 0.1j)
    got = evolve_amplitudes(p, s0, t)
    ref = _amplitude_ode(p, s0, t)
    assert abs(got.a - ref[0]) < 1e-10 and abs(got.sigma - ref[1]) < 1e-10


def test_strong_coupling_oscillates_at_eigenfrequency():
    p = ModelParams(gamma_a=1.0, omega_rabi=3.0, gamma_deph=1.0, gamma_pump=0.0)
    assert classify_regime(p) is not Regime.WEAK
    freq = abs(coupling_eigenvalues(p)[0].imag)
    t = np.linspace(0, 6, 3001)
    sig = np.array([abs(evolve_amplitudes(p, AmplitudeState(0, 1), x).sigma) for x in t])
    minima = t[1:-1][(sig[1:-1] < sig[:-2]) & (sig[1:-1] < sig[2:])]
    assert len(minima) >= 3
    assert np.diff(minima).mean() == pytest.approx(math.pi / freq, rel=1e-2)


@given(st.floats(-1, 3).map(lambda x: 10 ** x), st.floats(0, 1))
def test_amplitude_norm_decays_in_weak_coupling(ga, frac):
    p0 = ModelParams(gamma_a=ga, gamma_deph=1.0)
    om = frac * abs(2 * p0.dipole_rate - ga) / 4
    p = p0.replace(omega_rabi=om)
    norms = [abs(s.a) ** 2 + abs(s.sigma) ** 2
             for s in (evolve_amplitudes(p, AmplitudeState(0.5, 0.5j), t) for t in np.linspace(0, 5, 60))]
    assert np.all(np.diff(norms) <= 1e-15)


# -- energy variables -----------------------------------------------------------

def test_stationary_energy_uncoupled():
    e = stationary_energy(ModelParams(omega_rabi=0.0))
    assert (e.n_a, e.n_sigma, e.J) == pytest.approx((0.0, 1 / 11, 0.0), abs=1e-15)


@given(st.floats(-1, 6).map(lambda x: 10 ** x), st.floats(-1, 4).map(lambda x: 10 ** x))
def test_stationary_energy_residual(ga, om):
    p = ModelParams(gamma_a=ga, omega_rabi=om)
    e = stationary_energy(p)
    w, g = p.omega_rabi, p.dipole_rate
    assert abs(ga * e.n_a - w * e.J) <= 1e-12 * max(ga * e.n_a, 1e-300) + 1e-300
    assert abs(p.energy_rate * e.n_sigma + w * e.J - p.gamma_pump) < 1e-12
    assert abs((ga / 2 + g) * e.J - 2 * w * (e.n_sigma - e.n_a)) <= 1e-12 * (ga / 2 + g) * abs(e.J) + 1e-15


def test_stationary_energy_singular():
    with pytest.raises(SingularSystem):
        stationary_energy(ModelParams(gamma_a=0.0, omega_rabi=0.0))


def test_bad_cavity_efficiency_from_long_integration():
    p = ModelParams(gamma_a=1e5, omega_rabi=1e3)
    e = stationary_energy(p)
    beta = p.omega_rabi * e.J / e.n_sigma
    assert beta == pytest.approx(4 * p.omega_rabi ** 2 / p.gamma_a, rel=0.15)
    late = evolve_energy(p, EnergyState(0, 0, 0), 1.0)
    assert late.as_array() == pytest.approx(e.as_array(), rel=1e-7)


def test_energy_fixed_point_is_stationary():
    p = ModelParams(gamma_a=3.0, omega_rabi=20.0)
    e = stationary_energy(p)
    assert evolve_energy(p, e, 5.0).as_array() == pytest.approx(e.as_array(), abs=1e-9)


def test_energy_uncoupled_decay():
    p = ModelParams(omega_rabi=0.0)
    t = np.linspace(0, 4, 9)
    traj = evolve_energy(p, EnergyState(0, 1, 0), 4.0, t_eval=t)
    fixed = 1 / 11
    assert traj[1] == pytest.approx((1 - fixed) * np.exp(-1.1 * t) + fixed, abs=1e-10)


def test_energy_relaxes_to_stationary():
    p = ModelParams(gamma_a=1.0, omega_rabi=1.0)
    late = evolve_energy(p, EnergyState(0, 0, 0), 60.0)
    assert late.as_array() == pytest.approx(stationary_energy(p).as_array(), abs=1e-8)


def test_energy_negative_time():
    with pytest.raises(NegativeTime):
        evolve_energy(ModelParams(), EnergyState(0, 0, 0), -1)


# -- population memory equation -------------------------------------------------

def test_volterra_uncoupled_closed_form():
    p = ModelParams(omega_rabi=0.0, gamma_a=2.0)
    t = _grid(p, 5.0)
    n = evolve_nsigma_volterra(p, 1.0, t)
    assert np.abs(n - nsigma_markov_trajectory(p, 1.0, t)).max() < 1e-8


@pytest.mark.parametrize("ga,om,deph", [(1.0, 1.0, 1e4), (5.0, 0.5, 10.0), (100.0, 30.0, 100.0), (0.3, 3.0, 1.0)])
def test_volterra_long_time_equals_markov_fixed_point(ga, om, deph):
    p = ModelParams(gamma_a=ga, omega_rabi=om, gamma_deph=deph)
    m, _ = energy_system(p)
    slowest = np.min(-np.linalg.eigvals(m).real)
    t = _grid(p, 40.0 / slowest, fraction=1.0)
    n = evolve_nsigma_volterra(p, 0.0, t)
    assert n[-1] == pytest.approx(nsigma_markov_stationary(p), abs=1e-6)


@pytest.mark.parametrize("ga,om,deph", [(1.0, 1.0, 1e4), (5.0, 0.5, 10.0), (0.3, 3.0, 1.0)])
def test_volterra_matches_energy_equations(ga, om, deph):
    p = ModelParams(gamma_a=ga, omega_rabi=om, gamma_deph=deph)
    t = _grid(p, 3.0, fraction=0.05)
    n = evolve_nsigma_volterra(p, 0.3, t, method="recursive")
    ref = evolve_energy(p, EnergyState(0, 0.3, 0), t[-1], t_eval=t, rtol=1e-12)[1]
    assert np.abs(n - ref).max() < 1e-6


def test_volterra_bad_cavity_follows_markov_trajectory():
    p = ModelParams(gamma_a=1e5, omega_rabi=10.0)
    t = _grid(p, 6.0, fraction=1.0)
    n = evolve_nsigma_volterra(p, 0.0, t, method="recursive")
    assert np.abs(n - nsigma_markov_trajectory(p, 0.0, t)).max() < 1e-3


@pytest.mark.parametrize("ga,om,deph", [(1.0, 1.0, 1e4), (5.0, 4.0, 10.0), (30.0, 2.0, 1.0)])
def test_volterra_routes_agree(ga, om, deph):
    p = ModelParams(gamma_a=ga, omega_rabi=om, gamma_deph=deph)
    t = _grid(p, 1.0)[:3001]
    a = evolve_nsigma_volterra(p, 0.7, t, method="direct")
    b = evolve_nsigma_volterra(p, 0.7, t, method="recursive")
    assert np.abs(a - b).max() < 1e-12


def test_volterra_second_order():
    p = ModelParams(gamma_a=5.0, omega_rabi=4.0, gamma_deph=10.0)
    t_final = 2.0
    h0 = 0.1 / volterra_dominant_rate(p)
    errors = []
    for n in (1, 2, 4, 8):
        steps = int(math.ceil(t_final / h0)) * n
        t = np.linspace(0, t_final, steps + 1)
        sol = evolve_nsigma_volterra(p, 1.0, t)
        ref = evolve_energy(p, EnergyState(0, 1, 0), t_final, t_eval=t[::n], rtol=1e-13, atol=1e-15)[1]
        errors.append(np.abs(sol[::n] - ref).max())
    ratios = np.array(errors[:-1]) / np.array(errors[1:])
    assert np.all((ratios > 3.5) & (ratios < 4.5)), ratios


def test_volterra_step_too_large():
    p = ModelParams(gamma_a=10.0, omega_rabi=10.0)
    h = 0.2 / volterra_dominant_rate(p)
    with pytest.raises(StepTooLarge):
        evolve_nsigma_volterra(p, 0.0, np.arange(11) * h)


@pytest.mark.parametrize("t,n0", [
    (np.array([0.0, 1e-5, 3e-5]), 0.0),
    (np.array([1e-5, 2e-5, 3e-5]), 0.0),
    (np.array([0.0]), 0.0),
    (np.array([0.0, 1e-5, 2e-5]), 1.5),
])
def test_volterra_rejects_bad_input(t, n0):
    with pytest.raises(ConfigError):
        evolve_nsigma_volterra(ModelParams(), n0, t)


def test_series_csv_round_trip():
    buf = io.StringIO()
    t = np.array([0.0, 1 / 3, 2e-17])
    v = np.array([math.pi, -1e-300, 0.1])
    write_series_csv(buf, t, v, columns=("t", "K"), footer=["checked"])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,K" and lines[-1] == "# checked"
    back = np.array([[float(x) for x in line.split(",")] for line in lines[1:-1]])
    assert np.array_equal(back[:, 0], t) and np.array_equal(back[:, 1], v)
