"""Vectorised Lindblad generator.

Vectorisation stacks columns: ``vec(rho)[i + D*j] = rho[i, j]``, i.e.
``rho.reshape(-1, order="F")``.  With that convention

    vec(A @ rho @ B) = kron(B.T, A) @ vec(rho)

is the single identity every superoperator here is built from.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .operators import SystemOperators, build_hamiltonian
from .params import ModelParams

__all__ = [
    "LiouvillianMatrix",
    "vec",
    "unvec",
    "spre",
    "spost",
    "sprepost",
    "dissipator",
    "build_liouvillian",
    "apply_generator",
]


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    if dim * dim != v.size:
        raise DimensionMismatch(f"vector of length {v.size} is not a vectorised {dim}x{dim} matrix")
    return v.reshape(dim, dim, order="F")


def sprepost(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> a @ rho @ b``."""
    return np.kron(b.T, a)


def spre(a: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(a.shape[0]), a)


def spost(b: np.ndarray) -> np.ndarray:
    return np.kron(b.T, np.eye(b.shape[0]))


def dissipator(c: np.ndarray, rate: float) -> np.ndarray:
    """``rate/2 * (2 c rho c^+ - c^+c rho - rho c^+c)``."""
    cdc = c.conj().T @ c
    return 0.5 * rate * (2.0 * sprepost(c, c.conj().T) - spre(cdc) - spost(cdc))


@dataclass(frozen=True)
class LiouvillianMatrix:
    dim_rho: int
    matrix: np.ndarray

    @property
    def n_max(self) -> int:
        return self.dim_rho // 2 - 1

    def __matmul__(self, other):
        return self.matrix @ other


def build_liouvillian(p: ModelParams, ops: SystemOperators) -> LiouvillianMatrix:
    """Generator of the pumped, dephased Jaynes-Cummings master equation.

    Channels: emitter decay (``sigma``, ``gamma_diss``), cavity decay
    (``a``, ``gamma_a``), incoherent pump (``sigma^+``, ``gamma_pump``)
    and pure dephasing ``gamma_deph/4 * (sz rho sz - rho)``.
    """
    d = ops.dim
    h = build_hamiltonian(p, ops)
    gen = -1j * (spre(h) - spost(h))
    gen += dissipator(ops.sigma, p.gamma_diss)
    gen += dissipator(ops.a, p.gamma_a)
    gen += dissipator(ops.sigma_dag, p.gamma_pump)
    gen += 0.25 * p.gamma_deph * (sprepost(ops.sigma_z, ops.sigma_z) - np.eye(d * d))
    gen.setflags(write=False)
    return LiouvillianMatrix(dim_rho=d, matrix=gen)


def apply_generator(L: LiouvillianMatrix, rho: np.ndarray) -> np.ndarray:
    """Time derivative ``d rho / dt`` of a density matrix."""
    rho = np.asarray(rho)
    if rho.shape != (L.dim_rho, L.dim_rho):
        raise DimensionMismatch(f"rho has shape {rho.shape}, generator expects {(L.dim_rho,) * 2}")
    return unvec(L.matrix @ vec(rho), L.dim_rho)
