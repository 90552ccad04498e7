"""Physical parameter set, coupling-regime classification and the
eigenvalues of the linear amplitude equations.

All rates are expressed in units of the bare emitter decay rate
``gamma_diss``; :func:`validate_params` rescales raw input accordingly.
Emitter and cavity are resonant, so the simulation runs in the rotating
frame and the carrier frequency ``omega0`` is carried as metadata only.
"""

from __future__ import annotations

import cmath
import dataclasses
import enum
import math
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any

from .errors import BadTruncation, NegativeRate, UnknownKey, ZeroDissipation, ConfigError

__all__ = [
    "ModelParams",
    "Regime",
    "PARAM_KEYS",
    "RATE_KEYS",
    "validate_params",
    "classify_regime",
    "coupling_eigenvalues",
]

RATE_KEYS = ("gamma_diss", "gamma_pump", "gamma_deph", "gamma_a", "omega_rabi")
PARAM_KEYS = RATE_KEYS + ("n_max", "tol_steady", "tol_quad", "omega0")

# relative width of the band around a regime boundary that is resolved
# toward the weaker regime
BOUNDARY_RTOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Rates of the pumped emitter + cavity model, in units of ``gamma_diss``.

    The defaults are the operating point used throughout: strong pure
    dephasing (``1e4``) and weak incoherent pumping (``0.1``).
    """

    gamma_diss: float = 1.0
    gamma_pump: float = 0.1
    gamma_deph: float = 1e4
    gamma_a: float = 1.0
    omega_rabi: float = 1.0
    n_max: int = 8
    tol_steady: float = 1e-10
    tol_quad: float = 1e-10
    omega0: float | None = None

    def __post_init__(self):
        for key in RATE_KEYS:
            value = getattr(self, key)
            if not math.isfinite(value) or value < 0:
                raise NegativeRate(f"{key} must be a finite rate >= 0, got {value!r}")
        if self.gamma_diss == 0:
            raise ZeroDissipation("gamma_diss is the unit rate and must be > 0")
        if isinstance(self.n_max, bool) or int(self.n_max) != self.n_max or self.n_max < 1:
            raise BadTruncation(f"n_max must be an integer >= 1, got {self.n_max!r}")
        object.__setattr__(self, "n_max", int(self.n_max))
        for key in ("tol_steady", "tol_quad"):
            if not getattr(self, key) > 0:
                raise ConfigError(f"{key} must be > 0")

    @property
    def dipole_rate(self) -> float:
        """Decay rate of the emitter coherence, (diss + pump + deph) / 2."""
        return 0.5 * (self.gamma_diss + self.gamma_pump + self.gamma_deph)

    @property
    def energy_rate(self) -> float:
        """Decay rate of the emitter population, diss + pump."""
        return self.gamma_diss + self.gamma_pump

    @property
    def dim(self) -> int:
        """Hilbert-space dimension of emitter x truncated Fock space."""
        return 2 * (self.n_max + 1)

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def scaled(self, factor: float) -> "ModelParams":
        """All rates multiplied by ``factor`` (no renormalisation)."""
        return self.replace(**{k: getattr(self, k) * factor for k in RATE_KEYS})

    def as_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


class Regime(str, enum.Enum):
    WEAK = "WeakCoupling"
    STRONG_INCOHERENT = "StrongIncoherent"
    COHERENT = "Coherent"

    def __str__(self):
        return self.value


def validate_params(raw: Mapping[str, Any]) -> ModelParams:
    """Build a :class:`ModelParams` from a raw record and normalise it.

    Every rate is divided by ``gamma_diss`` so that the returned set has
    ``gamma_diss == 1``.  Missing keys take the dataclass defaults; unknown
    keys are rejected.
    """
    unknown = sorted(set(raw) - set(PARAM_KEYS))
    if unknown:
        raise UnknownKey(f"unknown parameter key(s): {', '.join(unknown)}")
    values = dict(raw)
    for key in RATE_KEYS + ("tol_steady", "tol_quad"):
        if key in values:
            try:
                values[key] = float(values[key])
            except (TypeError, ValueError):
                raise ConfigError(f"{key} must be a number, got {values[key]!r}") from None
    if "n_max" in values:
        n = values["n_max"]
        if isinstance(n, float) and n.is_integer():
            values["n_max"] = int(n)
        elif not isinstance(n, int) or isinstance(n, bool):
            raise BadTruncation(f"n_max must be an integer, got {n!r}")
    unit = values.get("gamma_diss", 1.0)
    if unit < 0:
        raise NegativeRate(f"gamma_diss must be >= 0, got {unit!r}")
    if unit == 0:
        raise ZeroDissipation("gamma_diss is the unit rate and must be > 0")
    # validate signs before rescaling so the error names the offending key
    p = ModelParams(**values)
    return p.scaled(1.0 / unit) if unit != 1.0 else p


def _below(x: float, bound: float) -> bool:
    """Strict ``x < bound`` with ties (within BOUNDARY_RTOL) counted as below."""
    return x < bound or math.isclose(x, bound, rel_tol=BOUNDARY_RTOL)


def classify_regime(p: ModelParams) -> Regime:
    g, ga, om = p.dipole_rate, p.gamma_a, p.omega_rabi
    if _below(4.0 * om, abs(2.0 * g - ga)):
        return Regime.WEAK
    if om > 2.0 * g + ga and not math.isclose(om, 2.0 * g + ga, rel_tol=BOUNDARY_RTOL):
        return Regime.COHERENT
    return Regime.STRONG_INCOHERENT


def is_strong(p: ModelParams) -> bool:
    return classify_regime(p) is not Regime.WEAK


def coupling_eigenvalues(p: ModelParams) -> tuple[complex, complex]:
    """Eigenvalues ``(lam_plus, lam_minus)`` of the cavity/emitter amplitude system.

    The system is ``d/dt (a, s) = [[-ga/2, -i W], [-i W, -G]] (a, s)``.
    ``lam_minus`` is formed without cancellation and ``lam_plus`` from the
    determinant, so both keep full relative accuracy when one eigenvalue is
    much smaller than the other.
    """
    half_a = 0.5 * p.gamma_a
    g = p.dipole_rate
    om = p.omega_rabi
    mean = -0.5 * (half_a + g)
    root = cmath.sqrt(complex((0.5 * (half_a - g)) ** 2 - om * om))
    det = half_a * g + om * om
    lam_minus = mean - root
    if lam_minus == 0:
        return 0j, 0j
    return det / lam_minus, lam_minus
