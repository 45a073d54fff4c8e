"""
Time-domain solution of the projected dynamics.

``A(t)`` is the system-factor matrix of ``P0 exp(-itH) P0``; it obeys

    dA/dt = -i H_eff A - lambda^2 int_0^t K(t - s) A(s) ds,   A(0) = 1.

The one-quantum amplitudes follow by variation of constants,

    B_q(t) = -i lambda int_0^t exp(-i (D + w_q)(t - s)) F_q A(s) ds,

and the physical amplitude on ``|e_m, 1_{w_q}>`` is ``sqrt(w_q) (B_q phi)_m``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .kernel import KernelTable
from .model import (ModelSpec, ReservoirGrid, effective_system_hamiltonian,
                    emission_amplitudes, require_valid)

__all__ = [
    "AmplitudeTrajectory",
    "ExcitationTrajectory",
    "solve_amplitude",
    "reconstruct_excitation",
    "norm_defect",
    "time_index",
    "write_amplitude_csv",
    "trajectory_dump",
]


@dataclass(frozen=True, eq=False)
class AmplitudeTrajectory:
    times: np.ndarray
    samples: np.ndarray  # (len(times), n, n)
    dt: float | None = None

    @property
    def n(self):
        return self.samples.shape[1]

    def at(self, t):
        return self.samples[time_index(self, t)]

    def spectral_norms(self):
        return np.linalg.norm(self.samples, ord=2, axis=(1, 2))

    def contraction_excess(self):
        """``max(||A(t)|| - 1, 0)`` over the trajectory."""
        return max(float(np.max(self.spectral_norms())) - 1.0, 0.0)


@dataclass(frozen=True, eq=False)
class ExcitationTrajectory:
    grid: ReservoirGrid
    times: np.ndarray
    samples: np.ndarray  # (len(times), N, n, n), unweighted B_q
    dt: float | None = None

    def kraus_operators(self, index):
        """``sqrt(w_q) B_q`` at stored sample ``index``."""
        return np.sqrt(self.grid.weights)[:, None, None] * self.samples[index]


def time_index(traj, t):
    """Index of the stored sample at time ``t`` (exact match up to 1e-9 dt)."""
    times = np.asarray(traj.times)
    j = int(np.argmin(np.abs(times - t)))
    scale = traj.dt if traj.dt else 1.0
    if abs(times[j] - t) > 1e-9 * scale + 1e-12 * abs(t):
        raise ValueError(f"time {t} is not a stored sample")
    return j


def solve_amplitude(spec: ModelSpec, kernel: KernelTable | None, dt: float,
                    n_steps: int) -> AmplitudeTrajectory:
    """Integrate the amplitude equation on ``t_k = k dt``, ``k = 0..n_steps``.

    Trapezoidal product integration: the convolution uses trapezoid weights
    on the sampled kernel and the time step is the trapezoidal (implicit)
    rule.  The corrector equation is linear in ``A_{k+1}`` and is solved
    exactly, which is what a predictor-corrector with converged corrections
    would produce.  ``kernel=None`` (or a model without channels, or
    ``lambda = 0``) leaves ``A(t) = exp(-i t H_eff)``, evaluated exactly.
    """
    require_valid(spec)
    if n_steps < 1:
        raise ValueError("need at least one step")
    if not dt > 0:
        raise ValueError("dt must be positive")
    n = spec.n
    H = effective_system_hamiltonian(spec)
    lam2 = spec.coupling**2
    free = kernel is None or not spec.channels or lam2 == 0.0 or not np.any(kernel.samples)
    if not free:
        if abs(kernel.dt - dt) > 1e-12 * dt:
            raise ValueError(f"kernel sampled at dt={kernel.dt}, solver asked for dt={dt}")
        if kernel.n_steps < n_steps:
            raise ValueError(f"kernel has {kernel.n_steps} steps, need {n_steps}")

    A = np.empty((n_steps + 1, n, n), dtype=complex)
    A[0] = np.eye(n)
    eye = np.eye(n)
    if free:
        # no memory term: the constant-coefficient equation is solved exactly
        h, V = np.linalg.eigh(H)
        t = dt * np.arange(n_steps + 1)
        A[:] = np.einsum("ia,ta,ja->tij", V, np.exp(-1j * np.multiply.outer(t, h)), V.conj())
        return AmplitudeTrajectory(t, A, dt)

    K = lam2 * np.asarray(kernel.samples[: n_steps + 1])
    lu = sla.lu_factor(eye + 0.5j * dt * H + 0.25 * dt * dt * K[0])
    # F_k = -i H A_k - Q_k, Q_k the trapezoid convolution at t_k
    F = -1j * H @ A[0]
    for k in range(n_steps):
        # S = dt * (K_{k+1} A_0 / 2 + sum_{j=1}^{k} K_{k+1-j} A_j)
        S = 0.5 * K[k + 1] @ A[0]
        if k > 0:
            S = S + np.tensordot(K[k:0:-1], A[1:k + 1], axes=([0, 2], [0, 1]))
        S *= dt
        rhs = A[k] + 0.5 * dt * F - 0.5 * dt * S
        A[k + 1] = sla.lu_solve(lu, rhs)
        F = -1j * H @ A[k + 1] - (S + 0.5 * dt * K[0] @ A[k + 1])
    return AmplitudeTrajectory(dt * np.arange(n_steps + 1), A, dt)


def _phi_weights(z):
    """``int_0^1 e^{z x} dx`` and ``int_0^1 x e^{z x} dx`` without cancellation."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-2
    zs = np.where(small, 1.0, z)
    em1 = np.expm1(zs)
    phi0 = np.where(small, 1 + z / 2 + z**2 / 6 + z**3 / 24 + z**4 / 120 + z**5 / 720, em1 / zs)
    phi1 = np.where(small, 0.5 + z / 3 + z**2 / 8 + z**3 / 30 + z**4 / 144 + z**5 / 840,
                    ((zs - 1) * em1 + zs) / zs**2)
    return phi0, phi1


def reconstruct_excitation(spec: ModelSpec, traj: AmplitudeTrajectory, grid: ReservoirGrid,
                           stride: int = 1) -> ExcitationTrajectory:
    """One-quantum amplitudes ``B_q(t)`` on the sample times of ``traj``.

    Each step integrates the oscillatory factor exactly against the linear
    interpolant of ``A`` (product trapezoid), so accuracy does not degrade
    for ``w_q dt`` of order one.  Only every ``stride``-th sample is stored.
    """
    require_valid(spec)
    if traj.dt is None:
        raise ValueError("reconstruction needs a uniformly sampled trajectory")
    if traj.n != spec.n:
        raise ValueError("trajectory and model disagree on the number of levels")
    dt = traj.dt
    n = spec.n
    N = grid.n_nodes
    F = emission_amplitudes(spec, grid.nodes)  # (N, m, i)
    lam = spec.coupling
    theta = grid.nodes[:, None] + spec.energies[None, :]  # (N, m)
    rot = np.exp(-1j * theta * dt)
    # u = t_{k+1} - s: weight of A_k is int u e^{-i theta u}/dt, of A_{k+1} the rest
    phi0, phi1 = _phi_weights(-1j * theta * dt)
    w_old = (dt * phi1)[:, :, None]
    w_new = (dt * (phi0 - phi1))[:, :, None]

    M = traj.samples.shape[0] - 1
    keep = list(range(0, M + 1, stride))
    if keep[-1] != M:
        keep.append(M)
    out = np.zeros((len(keep), N, n, n), dtype=complex)
    B = np.zeros((N, n, n), dtype=complex)
    if lam != 0.0 and np.any(F):
        FA_old = F @ traj.samples[0]
        slot = 1
        for k in range(M):
            FA_new = F @ traj.samples[k + 1]
            B = rot[:, :, None] * B - 1j * lam * (w_old * FA_old + w_new * FA_new)
            FA_old = FA_new
            if slot < len(keep) and keep[slot] == k + 1:
                out[slot] = B
                slot += 1
    times = traj.times[keep]
    return ExcitationTrajectory(grid, times, out, dt * stride if len(keep) > 1 else None)


def norm_defect(traj: AmplitudeTrajectory, exc: ExcitationTrajectory) -> np.ndarray:
    """``|| A^dag A + sum_q w_q B_q^dag B_q - 1 ||_2`` at every stored excitation sample."""
    n = traj.n
    w = exc.grid.weights
    out = np.empty(len(exc.times))
    for s, t in enumerate(exc.times):
        A = traj.samples[time_index(traj, t)]
        B = exc.samples[s]
        G = A.conj().T @ A + np.einsum("q,qmi,qmj->ij", w, B.conj(), B) - np.eye(n)
        out[s] = np.linalg.norm(G, ord=2)
    return out


def _fmt(x):
    return f"{x:.16e}"


def write_amplitude_csv(traj: AmplitudeTrajectory, path):
    n = traj.n
    header = ["t"]
    for k in range(1, n + 1):
        for l in range(1, n + 1):
            header += [f"re_A_{k}_{l}", f"im_A_{k}_{l}"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, A in zip(traj.times, traj.samples):
            row = [_fmt(t)]
            for z in A.ravel():
                row += [_fmt(z.real), _fmt(z.imag)]
            w.writerow(row)


def trajectory_dump(traj: AmplitudeTrajectory, stride: int = 1) -> str:
    """Structured text (JSON) form of a trajectory: ``[re, im]`` pairs, row-major."""
    idx = range(0, len(traj.times), stride)
    doc = {
        "dt": traj.dt,
        "n": traj.n,
        "samples": [
            {"t": float(traj.times[j]),
             "A": [[[float(z.real), float(z.imag)] for z in row] for row in traj.samples[j]]}
            for j in idx
        ],
    }
    return json.dumps(doc, indent=1)
