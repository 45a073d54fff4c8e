"""
Exact diagonalization of the discretized Friedrichs Hamiltonian.

The invariant subspace ``C^n (x) vac  +  C^n (x) span{|1_{w_q}>}`` is
represented with the vacuum block first and the one-quantum sector in
node-major order: basis index ``n + q*n + m`` is ``|e_m, 1_{w_q}>``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (ModelSpec, ReservoirGrid, effective_system_hamiltonian,
                    emission_amplitudes, require_valid)

__all__ = ["DiscretizedHamiltonian", "OracleDimensionError", "MAX_DIMENSION",
           "build", "exact_amplitude", "exact_heisenberg", "BlockObservable"]

MAX_DIMENSION = 20000


class OracleDimensionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BlockObservable:
    """Compressions of a Heisenberg-evolved observable to the vacuum and one-quantum sectors."""

    a00: np.ndarray
    a11: np.ndarray
    t: float


@dataclass(frozen=True, eq=False)
class DiscretizedHamiltonian:
    n: int
    grid: ReservoirGrid
    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self):
        return self.matrix.shape[0]

    def propagator(self, t):
        V = self.eigenvectors
        return (V * np.exp(-1j * self.eigenvalues * t)) @ V.conj().T


def check_dimension(n: int, n_nodes: int):
    d = n * (1 + n_nodes)
    if d > MAX_DIMENSION:
        raise OracleDimensionError(
            f"oracle dimension gate exceeded: d = {d} > {MAX_DIMENSION}")
    return d


def build(spec: ModelSpec, grid: ReservoirGrid) -> DiscretizedHamiltonian:
    require_valid(spec)
    n, N = spec.n, grid.n_nodes
    d = check_dimension(n, N)
    H = np.zeros((d, d), dtype=complex)
    H[:n, :n] = effective_system_hamiltonian(spec)
    one = (grid.nodes[:, None] + spec.energies[None, :]).ravel()
    H[n:, n:] = np.diag(one)
    coup = spec.coupling * np.sqrt(grid.weights)[:, None, None] * emission_amplitudes(spec, grid.nodes)
    H[n:, :n] = coup.reshape(N * n, n)
    H[:n, n:] = H[n:, :n].conj().T
    evals, evecs = np.linalg.eigh(H)
    for arr in (H, evals, evecs):
        arr.setflags(write=False)
    return DiscretizedHamiltonian(n, grid, H, evals, evecs)


def exact_amplitude(H: DiscretizedHamiltonian, t) -> np.ndarray:
    """Vacuum block of ``exp(-i t H)``; an array ``t`` gives shape ``(len(t), n, n)``."""
    Vv = H.eigenvectors[: H.n]
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    ph = np.exp(-1j * np.multiply.outer(t, H.eigenvalues))
    out = np.einsum("ia,ta,ja->tij", Vv, ph, Vv.conj())
    return out[0] if scalar else out


def initial_observable(a, n_nodes):
    """``a (x) 1`` restricted to the invariant subspace."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    X = np.zeros((n * (1 + n_nodes),) * 2, dtype=complex)
    X[:n, :n] = a
    X[n:, n:] = np.kron(np.eye(n_nodes), a)
    return X


def exact_heisenberg(H: DiscretizedHamiltonian, a, t) -> BlockObservable:
    """``exp(itH) (a (x) 1) exp(-itH)`` compressed to the two sectors."""
    n = H.n
    U = H.propagator(t)
    X = U.conj().T @ initial_observable(a, H.grid.n_nodes) @ U
    return BlockObservable(X[:n, :n].copy(), X[n:, n:].copy(), float(t))
