"""Closed-form results: cavity-modified emitter rates, the two analytic
g2 formulas, the population memory kernel and the Lorentzian filter.

In the effective picture the emitter keeps its bare structure but with
renormalised decay, pump and dephasing rates; the cavity then acts purely
as a Lorentzian spectral filter of width ``gamma_a``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DegenerateFilter, NegativeTime
from .params import ModelParams

__all__ = [
    "EffectiveRates",
    "KernelSample",
    "effective_rates",
    "filtered_g2",
    "g2_eff",
    "g2_neglect",
    "kernel_K",
    "kernel_values",
    "kernel_decay_rates",
    "kernel_integral",
    "kernel_integral_numeric",
    "kernel_tmax",
    "nsigma_markov_stationary",
    "filter_transmission",
]


@dataclass(frozen=True)
class EffectiveRates:
    gamma_diss_eff: float
    gamma_pump_eff: float
    gamma_deph_eff: float

    @property
    def dipole_rate(self) -> float:
        return 0.5 * (self.gamma_diss_eff + self.gamma_pump_eff + self.gamma_deph_eff)

    @property
    def energy_rate(self) -> float:
        return self.gamma_diss_eff + self.gamma_pump_eff


def _require_filter(p: ModelParams) -> None:
    if p.gamma_a == 0:
        raise DegenerateFilter("gamma_a = 0: a zero-width filter is outside the model")


def effective_rates(p: ModelParams) -> EffectiveRates:
    if p.omega_rabi == 0:
        return EffectiveRates(p.gamma_diss, p.gamma_pump, p.gamma_deph)
    _require_filter(p)
    ga, g, e = p.gamma_a, p.dipole_rate, p.energy_rate
    w2 = p.omega_rabi ** 2
    base = ga * (2.0 * g + ga)
    den = base + 8.0 * w2
    diss = p.gamma_diss + 4.0 * w2 * (ga - p.gamma_diss) / den
    pump = p.gamma_pump * (base + 4.0 * w2) / den
    deph = p.gamma_deph + 4.0 * w2 * (ga * (2.0 * g + e) + 8.0 * w2) / (ga * den)
    return EffectiveRates(diss, pump, deph)


def filtered_g2(energy_rate: float, dipole_rate: float, gamma_a: float) -> float:
    """g2(0) of a pumped two-level emitter seen through a Lorentzian filter."""
    if gamma_a == 0:
        raise DegenerateFilter("gamma_a = 0: a zero-width filter is outside the model")
    e, g, ga = energy_rate, dipole_rate, gamma_a
    return 2.0 * e * (2.0 * g + ga) / ((e + ga) * (2.0 * g + 3.0 * ga))


def g2_eff(p: ModelParams) -> float:
    _require_filter(p)
    r = effective_rates(p)
    return filtered_g2(r.energy_rate, r.dipole_rate, p.gamma_a)


def g2_neglect(p: ModelParams) -> float:
    """Filter formula with bare rates, i.e. ignoring back-action on the emitter."""
    return filtered_g2(p.energy_rate, p.dipole_rate, p.gamma_a)


@dataclass(frozen=True)
class KernelSample:
    t: float
    value: float


def _kernel_constants(p: ModelParams) -> tuple[float, complex]:
    envelope = 0.25 * (3.0 * p.gamma_a + 2.0 * p.dipole_rate)
    q = cmath.sqrt(complex((0.5 * p.gamma_a - p.dipole_rate) ** 2 - 16.0 * p.omega_rabi ** 2))
    return envelope, q


def kernel_decay_rates(p: ModelParams) -> tuple[complex, complex]:
    """The two exponents ``(slow, fast)`` with ``K ~ exp(-slow t) - exp(-fast t)``."""
    a, q = _kernel_constants(p)
    return a - 0.5 * q, a + 0.5 * q


def kernel_values(p: ModelParams, t) -> np.ndarray:
    """Memory kernel on an array of times.

    Evaluated in complex arithmetic; on the oscillatory branch ``q`` is
    imaginary and ``sinh(q t/2)/(q/2)`` turns into ``sin``.  Small
    ``|q| t`` uses a Taylor series; large real ``q t`` switches to the
    difference-of-exponentials form to avoid overflow.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise NegativeTime("kernel is defined for t >= 0")
    a, q = _kernel_constants(p)
    x = 0.5 * q * t
    out = np.empty(t.shape, dtype=complex)
    small = np.abs(x) < 0.5e-6
    big = np.abs(x.real) > 300.0
    mid = ~(small | big)
    xs = x[small]
    out[small] = t[small] * (1.0 + xs * xs / 6.0)
    out[mid] = np.sinh(x[mid]) / (0.5 * q)
    out[small | mid] *= np.exp(-a * t[small | mid])
    if np.any(big):
        tb = t[big]
        out[big] = (np.exp(-(a - 0.5 * q) * tb) - np.exp(-(a + 0.5 * q) * tb)) / q
    return out.real


def _kernel_scalar(a: float, q: complex, t: float) -> float:
    x = 0.5 * q * t
    if abs(x) < 0.5e-6:
        val = t * (1.0 + x * x / 6.0) * math.exp(-a * t)
    elif abs(x.real) > 300.0:
        val = (cmath.exp(-(a - 0.5 * q) * t) - cmath.exp(-(a + 0.5 * q) * t)) / q
    else:
        val = cmath.sinh(x) / (0.5 * q) * math.exp(-a * t)
    return val.real


def kernel_K(p: ModelParams, t: float) -> KernelSample:
    if t < 0:
        raise NegativeTime(f"kernel is defined for t >= 0, got {t!r}")
    return KernelSample(float(t), float(kernel_values(p, np.array([t]))[0]))


def kernel_integral(p: ModelParams) -> float:
    """Closed-form integral of the kernel over ``[0, inf)``.

    The kernel's Laplace transform is ``1 / ((s + slow)(s + fast))``, so
    the integral is ``1 / (slow * fast)``.
    """
    ga, g = p.gamma_a, p.dipole_rate
    return 2.0 / (ga * (2.0 * g + ga) + 8.0 * p.omega_rabi ** 2)


def kernel_tmax(p: ModelParams, floor: float = 1e-16) -> float:
    """Time after which the kernel has decayed below ``floor`` of its scale.

    Uses the slowest decay exponent, not just the common envelope: on the
    real branch the kernel decays at ``a - q/2``, which can be far slower
    than the envelope rate ``a``.
    """
    slow, _ = kernel_decay_rates(p)
    rate = slow.real
    if rate <= 0:
        raise DegenerateFilter("kernel does not decay (gamma_a = 0 and omega_rabi = 0)")
    return -math.log(floor) / rate


def kernel_integral_numeric(p: ModelParams, *, rel_tol: float | None = None) -> float:
    """Adaptive quadrature of the kernel over ``[0, inf)``.

    On the oscillatory branch the kernel is ``exp(-a t) sin(w t) / w``, so
    ``K(t + pi/w) = -exp(-a pi/w) K(t)`` and the whole integral is the
    integral over the first (positive) half period divided by
    ``1 + exp(-a pi/w)``.  This avoids summing many cancelling lobes.  On
    the real branch the kernel is positive and the range up to
    :func:`kernel_tmax` is cut geometrically between the fast and slow
    time scales so every piece is smooth.
    """
    tol = p.tol_quad if rel_tol is None else rel_tol
    tmax = kernel_tmax(p)
    a, q = _kernel_constants(p)
    _, fast = kernel_decay_rates(p)

    lobe = 1.0
    if q.real == 0.0 and q.imag > 0.0:
        half_period = 2.0 * math.pi / q.imag
        if half_period < tmax:
            tmax = half_period
            lobe = 1.0 + math.exp(-a * half_period)

    cuts = [0.0, tmax]
    t_fast = 1.0 / abs(fast)
    if t_fast < tmax:
        cuts.extend(np.geomspace(t_fast, tmax, 60))
    cuts = np.unique(np.clip(cuts, 0.0, tmax))

    def f(t):
        return _kernel_scalar(a, q, t)

    pieces = [quad(f, lo, hi, epsabs=0.0, epsrel=0.1 * tol, limit=200)[0]
              for lo, hi in zip(cuts[:-1], cuts[1:])]
    return math.fsum(pieces) / lobe


def nsigma_markov_stationary(p: ModelParams) -> float:
    """Fixed point of the Markovian population equation: pump_eff / energy_eff."""
    r = effective_rates(p)
    return r.gamma_pump_eff / r.energy_rate


def filter_transmission(p: ModelParams, detuning) -> complex:
    """Complex Lorentzian transmission at detuning ``omega - omega_cavity``."""
    _require_filter(p)
    half = 0.5j * p.gamma_a
    return half / (np.asarray(detuning) + half) if np.ndim(detuning) else complex(half / (detuning + half))
