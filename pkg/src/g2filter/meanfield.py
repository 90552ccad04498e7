"""Reduced dynamics in the single-excitation picture.

Three levels of description are integrated here:

* the linear cavity/emitter amplitude equations (exact 2x2 exponential),
* the energy variables ``(n_a, n_sigma, J)`` and their stationary point,
* the closed population equation for ``n_sigma`` obtained by eliminating
  the cavity, a Volterra integro-differential equation whose memory kernel
  is :func:`g2filter.effective.kernel_values`.

In closed form the population equation reads::

    dn/dt = -2 W^2 K(t) n(0) - gamma n + pump
            - 2 W^2 (gamma_a - gamma) (K * n)(t) - 2 W^2 pump (K * 1)(t)

with ``W = omega_rabi`` and ``*`` the causal convolution.  The last term
carries a minus sign: that is what eliminating ``n_a`` and ``J`` from the
energy equations gives, and it is the sign for which the long-time limit
reproduces the Markovian fixed point.
"""

from __future__ import annotations

import cmath
import csv
import math
import os
from dataclasses import dataclass, astuple

import numpy as np
import scipy.linalg as la
from numba import njit
from scipy.integrate import solve_ivp

from .effective import effective_rates, kernel_decay_rates, kernel_integral, kernel_values, nsigma_markov_stationary
from .errors import ConfigError, NegativeTime, SingularSystem, StepFailure, StepTooLarge
from .params import ModelParams, coupling_eigenvalues

__all__ = [
    "AmplitudeState",
    "EnergyState",
    "evolve_amplitudes",
    "energy_system",
    "stationary_energy",
    "evolve_energy",
    "energy_relaxation_rate",
    "volterra_dominant_rate",
    "evolve_nsigma_volterra",
    "nsigma_markov_trajectory",
    "write_series_csv",
    "MAX_STEP_RATE",
]

# largest allowed h * (dominant rate) for the Volterra stepper
MAX_STEP_RATE = 0.1


@dataclass(frozen=True)
class AmplitudeState:
    a: complex
    sigma: complex


@dataclass(frozen=True)
class EnergyState:
    n_a: float
    n_sigma: float
    J: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


def evolve_amplitudes(p: ModelParams, s0: AmplitudeState, t: float) -> AmplitudeState:
    """Exact solution of the linear amplitude equations at time ``t``."""
    if t < 0:
        raise NegativeTime(f"t must be >= 0, got {t!r}")
    lam_p, lam_m = coupling_eigenvalues(p)
    mean = 0.5 * (lam_p + lam_m)
    half_split = 0.5 * (lam_p - lam_m)
    m = np.array([[-0.5 * p.gamma_a, -1j * p.omega_rabi],
                  [-1j * p.omega_rabi, -p.dipole_rate]])
    shifted = m - mean * np.eye(2)
    x = half_split * t
    if abs(x) < 1.0:
        # cosh/sinh form stays regular through the degenerate point
        sinhc = cmath.sinh(x) / half_split if x != 0 else complex(t)
        prop = cmath.exp(mean * t) * (cmath.cosh(x) * np.eye(2) + sinhc * shifted)
    else:
        proj_p = (m - lam_m * np.eye(2)) / (lam_p - lam_m)
        proj_m = (lam_p * np.eye(2) - m) / (lam_p - lam_m)
        prop = cmath.exp(lam_p * t) * proj_p + cmath.exp(lam_m * t) * proj_m
    a, s = prop @ np.array([s0.a, s0.sigma], dtype=complex)
    return AmplitudeState(complex(a), complex(s))


def energy_system(p: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """``(M, b)`` with ``d/dt (n_a, n_sigma, J) = M @ x + b``."""
    ga, w = p.gamma_a, p.omega_rabi
    m = np.array([
        [-ga, 0.0, w],
        [0.0, -p.energy_rate, -w],
        [-2.0 * w, 2.0 * w, -(0.5 * ga + p.dipole_rate)],
    ])
    b = np.array([0.0, p.gamma_pump, 0.0])
    return m, b


def stationary_energy(p: ModelParams) -> EnergyState:
    m, b = energy_system(p)
    scale = np.prod(np.linalg.norm(m, axis=1))
    det = np.linalg.det(m)
    if scale == 0 or abs(det) < 1e-14 * scale:
        raise SingularSystem(f"stationary energy system is singular (det = {det:.3g})")
    x = np.linalg.solve(m, -b)
    resid = np.abs(m @ x + b).max()
    if resid > 1e-12 * max(1.0, np.abs(m).max() * np.abs(x).max()):
        raise SingularSystem(f"stationary energy residual {resid:.3g} too large")
    return EnergyState(*map(float, x))


def energy_relaxation_rate(p: ModelParams) -> float:
    """Slowest decay rate of the energy equations."""
    m, _ = energy_system(p)
    return float(np.min(-np.linalg.eigvals(m).real))


def _check_bounds(x: np.ndarray, tol: float = 1e-9) -> None:
    n_a, n_s, _ = x
    if n_a < -tol or n_s < -tol or n_s > 1 + tol:
        raise StepFailure(f"energy variables left their bounds: n_a={n_a:.3g}, n_sigma={n_s:.3g}")


def evolve_energy(p: ModelParams, e0: EnergyState, t: float, *,
                  rtol: float = 1e-11, atol: float = 1e-14, t_eval=None):
    """Integrate the energy equations from ``e0`` over ``[0, t]``.

    Returns the final :class:`EnergyState`, or, when ``t_eval`` is given,
    an array of shape ``(3, len(t_eval))``.
    """
    if t < 0:
        raise NegativeTime(f"t must be >= 0, got {t!r}")
    x0 = e0.as_array() if isinstance(e0, EnergyState) else np.asarray(e0, dtype=float)
    if t == 0:
        return EnergyState(*map(float, x0)) if t_eval is None else x0[:, None].copy()
    m, b = energy_system(p)
    sol = solve_ivp(lambda _t, x: m @ x + b, (0.0, float(t)), x0, method="DOP853",
                    rtol=rtol, atol=atol, t_eval=t_eval)
    if sol.status != 0:
        raise StepFailure(f"energy integration failed: {sol.message}")
    for col in sol.y.T:
        _check_bounds(col)
    if t_eval is not None:
        return sol.y
    return EnergyState(*map(float, sol.y[:, -1]))


def nsigma_markov_trajectory(p: ModelParams, n0: float, t) -> np.ndarray:
    """Closed-form solution of the Markovian population equation."""
    r = effective_rates(p)
    fixed = nsigma_markov_stationary(p)
    return fixed + (n0 - fixed) * np.exp(-r.energy_rate * np.asarray(t, dtype=float))


def volterra_dominant_rate(p: ModelParams) -> float:
    slow, fast = kernel_decay_rates(p)
    feedback = 2.0 * p.omega_rabi ** 2 * abs(p.gamma_a - p.energy_rate)
    memory = feedback * kernel_integral(p) if feedback else 0.0
    return max(abs(slow), abs(fast), p.energy_rate, memory)


# -- Volterra stepping -------------------------------------------------------
#
# Convolutions use product integration: n(s) is interpolated linearly on
# each cell and integrated exactly against the kernel (composite trapezoid
# in n).  Time stepping is Heun predictor-corrector.  Both are second
# order.  Two evaluations of the same discrete scheme are provided:
#
# direct     kernel cell weights from Gauss-Legendre on sampled kernel
#            values, convolution summed over the whole history, O(N^2)
# recursive  kernel realised as a 2-state linear filter, cell weights from
#            one 4x4 matrix exponential, O(N)


@njit(cache=True)
def _rhs(k_now, n, conv, k_int, n0, c_slip, c_loc, c_conv, pump, c_pump):
    return -c_slip * k_now * n0 - c_loc * n + pump - c_conv * conv - c_pump * k_int


@njit(cache=True)
def _march_recursive(n0, h, nsteps, E, w_prev, w_next, w_full, b0,
                     c_slip, c_loc, c_conv, pump, c_pump):
    out = np.empty(nsteps + 1)
    out[0] = n0
    x0 = 0.0
    x1 = 0.0
    y0 = 0.0
    y1 = 0.0
    z0 = b0[0]
    z1 = b0[1]
    n = n0
    conv = 0.0
    kval = 0.0
    kint = 0.0
    for k in range(nsteps):
        f = _rhs(kval, n, conv, kint, n0, c_slip, c_loc, c_conv, pump, c_pump)
        hx0 = E[0, 0] * x0 + E[0, 1] * x1 + w_prev[0] * n
        hx1 = E[1, 0] * x0 + E[1, 1] * x1 + w_prev[1] * n
        ny0 = E[0, 0] * y0 + E[0, 1] * y1 + w_full[0]
        ny1 = E[1, 0] * y0 + E[1, 1] * y1 + w_full[1]
        nz0 = E[0, 0] * z0 + E[0, 1] * z1
        nz1 = E[1, 0] * z0 + E[1, 1] * z1
        y0, y1, z0, z1 = ny0, ny1, nz0, nz1
        kval = z0
        kint = y0
        pred = n + h * f
        fp = _rhs(kval, pred, hx0 + w_next[0] * pred, kint, n0,
                  c_slip, c_loc, c_conv, pump, c_pump)
        n = n + 0.5 * h * (f + fp)
        x0 = hx0 + w_next[0] * n
        x1 = hx1 + w_next[1] * n
        conv = x0
        out[k + 1] = n
    return out


@njit(cache=True)
def _march_direct(n0, h, nsteps, alpha, beta, kvals, kints,
                  c_slip, c_loc, c_conv, pump, c_pump):
    out = np.empty(nsteps + 1)
    out[0] = n0
    conv = 0.0
    for k in range(nsteps):
        n = out[k]
        f = _rhs(kvals[k], n, conv, kints[k], n0, c_slip, c_loc, c_conv, pump, c_pump)
        hist = 0.0
        for j in range(k + 1):
            hist += out[j] * alpha[k - j]
        for j in range(k):
            hist += out[j + 1] * beta[k - j]
        pred = n + h * f
        fp = _rhs(kvals[k + 1], pred, hist + beta[0] * pred, kints[k + 1], n0,
                  c_slip, c_loc, c_conv, pump, c_pump)
        new = n + 0.5 * h * (f + fp)
        out[k + 1] = new
        conv = hist + beta[0] * new
    return out


def _filter_realisation(p: ModelParams, h: float):
    """Discrete propagator and cell weights of the kernel's 2-state filter.

    ``K(t) = c^T exp(A t) b`` with a companion matrix rescaled by
    ``sqrt(slow * fast)`` so its entries are balanced.
    """
    slow, fast = kernel_decay_rates(p)
    prod = (slow * fast).real
    total = (slow + fast).real
    w0 = math.sqrt(prod) if prod > 0 else 1.0
    a = np.array([[0.0, w0], [-prod / w0, -total]])
    b = np.array([0.0, 1.0 / w0])
    block = np.zeros((4, 4))
    block[:2, :2] = a
    block[:2, 2] = b
    block[2, 3] = 1.0 / h
    big = la.expm(block * h)
    prop = big[:2, :2]
    w_full = big[:2, 2]
    w_next = big[:2, 3]
    return prop, w_full - w_next, w_next, w_full, b


def _cell_weights(p: ModelParams, h: float, nsteps: int, order: int = 8):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    u = 0.5 * (nodes + 1.0)
    wq = 0.5 * weights
    cells = np.arange(nsteps)[:, None]
    kv = kernel_values(p, (cells + u[None, :]) * h)
    alpha = h * (kv * (u * wq)[None, :]).sum(axis=1)
    beta = h * (kv * ((1.0 - u) * wq)[None, :]).sum(axis=1)
    return alpha, beta


def evolve_nsigma_volterra(p: ModelParams, n0: float, t_grid, *, method: str = "auto") -> np.ndarray:
    """Emitter population on ``t_grid`` from the closed memory equation.

    ``t_grid`` must be uniform and start at 0 (the cavity is empty and the
    energy flow is zero there).  ``method`` selects the convolution
    evaluation: ``"direct"``, ``"recursive"`` or ``"auto"`` (recursive
    beyond a few thousand steps).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 2:
        raise ConfigError("t_grid needs at least two points")
    if t_grid[0] != 0:
        raise ConfigError("t_grid must start at t = 0")
    if not 0.0 <= n0 <= 1.0:
        raise ConfigError(f"n0 must be a probability, got {n0!r}")
    nsteps = t_grid.size - 1
    h = (t_grid[-1] - t_grid[0]) / nsteps
    if h <= 0 or not np.allclose(np.diff(t_grid), h, rtol=1e-9, atol=0.0):
        raise ConfigError("t_grid must be uniform and increasing")
    rate = volterra_dominant_rate(p)
    if h * rate > MAX_STEP_RATE * (1 + 1e-12):
        raise StepTooLarge(f"h * rate = {h * rate:.3g} exceeds {MAX_STEP_RATE}; use h <= {MAX_STEP_RATE / rate:.3g}")

    w2 = p.omega_rabi ** 2
    coefs = (2.0 * w2, p.energy_rate, 2.0 * w2 * (p.gamma_a - p.energy_rate),
             p.gamma_pump, 2.0 * w2 * p.gamma_pump)
    if method == "auto":
        method = "direct" if nsteps <= 4000 else "recursive"
    if method == "recursive":
        prop, w_prev, w_next, w_full, b = _filter_realisation(p, h)
        return _march_recursive(float(n0), h, nsteps, prop, w_prev, w_next, w_full, b, *coefs)
    if method == "direct":
        alpha, beta = _cell_weights(p, h, nsteps)
        kvals = kernel_values(p, t_grid)
        kints = np.concatenate(([0.0], np.cumsum(alpha + beta)))
        return _march_direct(float(n0), h, nsteps, alpha, beta, kvals, kints, *coefs)
    raise ConfigError(f"unknown method {method!r}")


def write_series_csv(target, t, values, *, columns=("t", "value"), footer: list[str] | None = None) -> None:
    """Two-column CSV with 17 significant digits; ``footer`` lines become ``#`` comments."""
    own = isinstance(target, (str, os.PathLike))
    fh = open(target, "w", newline="") if own else target
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for ti, vi in zip(np.asarray(t, dtype=float), np.asarray(values, dtype=float)):
            writer.writerow((f"{ti:.17g}", f"{vi:.17g}"))
        for line in footer or ():
            fh.write(f"# {line}\n")
    finally:
        if own:
            fh.close()
