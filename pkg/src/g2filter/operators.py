"""Dense operators on the emitter x truncated-Fock space.

Basis ordering is emitter-major: ``index = tls * (n_max + 1) + n`` with
``tls = 0`` for the ground state ``g`` and ``tls = 1`` for the excited
state ``e``.  So for ``n_max = 1`` the basis is ``|g,0>, |g,1>, |e,0>, |e,1>``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadTruncation
from .params import ModelParams

__all__ = ["SystemOperators", "build_system_operators", "build_hamiltonian", "basis_index"]


@dataclass(frozen=True)
class SystemOperators:
    n_max: int
    a: np.ndarray
    a_dag: np.ndarray
    sigma: np.ndarray
    sigma_dag: np.ndarray
    sigma_z: np.ndarray
    n_a_op: np.ndarray
    n_sigma_op: np.ndarray
    # emitter -> cavity energy flow, i(a sigma^+ - a^+ sigma); positive when
    # excitation moves into the cavity
    flow_op: np.ndarray

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    @property
    def fock_index(self) -> np.ndarray:
        """Photon number of every basis state."""
        return np.tile(np.arange(self.n_max + 1), 2)

    @property
    def excitation_op(self) -> np.ndarray:
        return self.n_a_op + self.n_sigma_op


def basis_index(tls: str | int, n: int, n_max: int) -> int:
    t = {"g": 0, "e": 1}.get(tls, tls)
    if t not in (0, 1) or not 0 <= n <= n_max:
        raise IndexError(f"no basis state ({tls}, {n}) for n_max={n_max}")
    return t * (n_max + 1) + n


def _frozen(m: np.ndarray) -> np.ndarray:
    m.setflags(write=False)
    return m


def build_system_operators(n_max: int) -> SystemOperators:
    if isinstance(n_max, bool) or int(n_max) != n_max or n_max < 1:
        raise BadTruncation(f"n_max must be an integer >= 1, got {n_max!r}")
    n_max = int(n_max)
    fock = np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1).astype(complex)
    lower = np.array([[0, 1], [0, 0]], dtype=complex)  # |g><e|
    eye_f = np.eye(n_max + 1)
    eye_2 = np.eye(2)

    a = np.kron(eye_2, fock)
    sigma = np.kron(lower, eye_f)
    a_dag = a.conj().T
    sigma_dag = sigma.conj().T
    sigma_z = sigma_dag @ sigma - sigma @ sigma_dag
    flow = 1j * (a @ sigma_dag - a_dag @ sigma)
    return SystemOperators(
        n_max=n_max,
        a=_frozen(a),
        a_dag=_frozen(a_dag),
        sigma=_frozen(sigma),
        sigma_dag=_frozen(sigma_dag),
        sigma_z=_frozen(sigma_z),
        n_a_op=_frozen(a_dag @ a),
        n_sigma_op=_frozen(sigma_dag @ sigma),
        flow_op=_frozen(flow),
    )


def build_hamiltonian(p: ModelParams, ops: SystemOperators) -> np.ndarray:
    """Resonant Jaynes-Cummings coupling in the rotating frame, H/hbar."""
    h = p.omega_rabi * (ops.a_dag @ ops.sigma + ops.a @ ops.sigma_dag)
    return _frozen(h)
