"""
Heisenberg-picture evolution of ``a (x) 1`` on the discretized reservoir.

With ``X_ab = P_a X P_b`` (0: vacuum sector, 1: one quantum) the Heisenberg
equation ``dX/dt = i[H, X]`` splits into four block equations.  Writing the
Hamiltonian as ``bold H + lambda bold V`` with ``bold H = diag(H_00, H_11)``
and ``bold V`` off-diagonal, the block-diagonal part ``D`` and the
off-diagonal part ``O`` obey

    D' = i[H, D] + i lambda [V, O],      O' = i[H, O] + i lambda [V, D],

and eliminating ``O'`` gives the second-order equation

    D'' = i[H, D'] - lambda^2 [V, [V, D]] - lambda [V, [H, O]].

``form="literal"`` drops the free terms ``i[H, O]`` from the coherence
blocks and starts from ``a_11(0) = 0``; the last term above then vanishes
and the second-order equation closes on ``D`` alone.  That variant is kept
for comparison only: it does not reproduce the exact evolution.

``T_t(a)`` is read from the vacuum block, ``T_t(a) = a_00(t)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynmap import KrausSnapshot, evolve_density, snapshot
from .kernel import Quadrature, tabulate_kernel
from .model import (ModelSpec, ReservoirGrid, effective_system_hamiltonian,
                    emission_amplitudes, require_valid)
from .oracle import BlockObservable
from .propagator import reconstruct_excitation, solve_amplitude

__all__ = [
    "BlockObservable",
    "StepTooLargeError",
    "GridMismatchError",
    "FORMS",
    "evolve_observable",
    "evolve_observables",
    "form_consistency",
    "duality_defect",
    "duality_table",
]

FORMS = ("corrected", "literal")
# RK4 is stable for |dt * frequency| below ~2.8 on the imaginary axis
_STABILITY = 2.5


class StepTooLargeError(RuntimeError):
    pass


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class _Blocks:
    """Discretized ``bold H`` (diagonal, in the eigenbasis of H_00) and ``bold V``."""

    n: int
    U: np.ndarray  # eigenvectors of H_00
    h0: np.ndarray
    h1: np.ndarray
    V10: np.ndarray  # (nN, n), lambda-free, sqrt(w)-weighted, rotated by U
    lam: float

    @property
    def V01(self):
        return self.V10.conj().T

    @property
    def spread(self):
        h = np.concatenate([self.h0, self.h1])
        return float(h.max() - h.min())


def _blocks(spec: ModelSpec, grid: ReservoirGrid) -> _Blocks:
    n, N = spec.n, grid.n_nodes
    h0, U = np.linalg.eigh(effective_system_hamiltonian(spec))
    h1 = (grid.nodes[:, None] + spec.energies[None, :]).ravel()
    F = np.sqrt(grid.weights)[:, None, None] * emission_amplitudes(spec, grid.nodes)
    V10 = F.reshape(N * n, n) @ U
    return _Blocks(n, U, h0, h1, V10, float(spec.coupling))


class _Generator:
    """Right-hand sides of the block system; arrays carry a leading batch axis."""

    def __init__(self, b: _Blocks, literal: bool):
        self.b = b
        self.literal = literal
        self.V10 = b.V10
        self.V01 = b.V01
        self.w00 = 1j * (b.h0[:, None] - b.h0[None, :])
        self.w11 = 1j * (b.h1[:, None] - b.h1[None, :])
        self.w01 = 1j * (b.h0[:, None] - b.h1[None, :])
        self.il = 1j * b.lam

    def coherence(self, a00, a01, a10, a11):
        """``O' = i[H, O] + i lambda [V, D]`` (free part omitted when literal)."""
        V01, V10, il = self.V01, self.V10, self.il
        d01 = il * (V01 @ a11 - a00 @ V01)
        d10 = il * (V10 @ a00 - a11 @ V10)
        if not self.literal:
            d01 = d01 + self.w01 * a01
            d10 = d10 - self.w01.T * a10
        return d01, d10

    def diagonal(self, a00, a11, o01, o10):
        """``i[H, D] + i lambda [V, O]`` for a block-diagonal ``D`` and off-diagonal ``O``."""
        V01, V10, il = self.V01, self.V10, self.il
        d00 = self.w00 * a00 + il * (V01 @ o10 - o01 @ V10)
        d11 = self.w11 * a11 + il * (V10 @ o01 - o10 @ V01)
        return d00, d11

    def first(self, y):
        a00, a01, a10, a11 = y
        d00, d11 = self.diagonal(a00, a11, a01, a10)
        d01, d10 = self.coherence(a00, a01, a10, a11)
        return (d00, d01, d10, d11)

    def second(self, y):
        a00, a01, a10, a11, v00, v11 = y
        d01, d10 = self.coherence(a00, a01, a10, a11)
        # D'' = i[H, D'] + i lambda [V, O']
        w00, w11 = self.diagonal(v00, v11, d01, d10)
        return (v00, d01, d10, v11, w00, w11)


def _rk4(f, y, dt):
    k1 = f(y)
    k2 = f(tuple(a + 0.5 * dt * k for a, k in zip(y, k1)))
    k3 = f(tuple(a + 0.5 * dt * k for a, k in zip(y, k2)))
    k4 = f(tuple(a + dt * k for a, k in zip(y, k3)))
    return tuple(a + dt / 6.0 * (p + 2.0 * q + 2.0 * r + s)
                 for a, p, q, r, s in zip(y, k1, k2, k3, k4))


def _schedule(t_samples, dt):
    """Sorted sample order and, per gap, the count and size of equal substeps <= dt."""
    t = np.asarray(t_samples, dtype=float)
    if np.any(t < 0):
        raise ValueError("times must be non-negative")
    order = np.argsort(t, kind="stable")
    plan, prev = [], 0.0
    for j in order:
        gap = t[j] - prev
        m = int(np.ceil(gap / dt - 1e-9)) if gap > 0 else 0
        plan.append((int(j), m, gap / m if m else 0.0))
        prev = t[j]
    return plan


def _step_counts(t_samples, dt):
    t = np.asarray(t_samples, dtype=float)
    if np.any(t < 0):
        raise ValueError("times must be non-negative")
    k = np.rint(t / dt).astype(int)
    if np.any(np.abs(k * dt - t) > 1e-9 * dt + 1e-12 * np.abs(t)):
        raise ValueError("sample times must be integer multiples of dt")
    return k


def evolve_observables(spec: ModelSpec, grid: ReservoirGrid, observables, t_samples, dt: float,
                       form: str = "corrected", order: int = 2, blowup: float = 10.0):
    """Evolve a batch of system observables; returns ``BlockObservable`` lists.

    Parameters
    ----------
    observables : array_like, shape (B, n, n)
    t_samples : sequence of float
    dt : float
        Largest step; each gap between sample times is split into equal steps.
    form : {"corrected", "literal"}
    order : {1, 2}
        Integrate the first-order block system or the second-order equation.
    blowup : float
        The run aborts with :class:`StepTooLargeError` once ``||a_00||``
        exceeds ``blowup`` times its bound ``||a||``.

    Returns
    -------
    list of list of BlockObservable
        ``out[b][j]`` is observable ``b`` at ``t_samples[j]``.
    """
    require_valid(spec)
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}")
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if not dt > 0:
        raise ValueError("dt must be positive")
    a = np.asarray(observables, dtype=complex)
    if a.ndim == 2:
        a = a[None]
    n = spec.n
    if a.shape[1:] != (n, n):
        raise ValueError(f"observables must be {n}x{n}")
    plan = _schedule(t_samples, dt)

    b = _blocks(spec, grid)
    if dt * (b.spread + abs(b.lam) * np.linalg.norm(b.V10, 2)) > _STABILITY:
        raise StepTooLargeError(
            f"dt = {dt} exceeds the stability limit for frequencies up to {b.spread:.3g}")
    gen = _Generator(b, literal=(form == "literal"))
    N, M, B = grid.n_nodes, n * grid.n_nodes, a.shape[0]
    U = b.U
    a00 = U.conj().T @ a @ U
    a11 = np.zeros((B, M, M), dtype=complex)
    if form == "corrected":
        # the one-quantum sector keeps its original basis
        idx = np.arange(N)
        a11.reshape(B, N, n, N, n)[:, idx, :, idx, :] = a[None]
    a01 = np.zeros((B, n, M), dtype=complex)
    a10 = np.zeros((B, M, n), dtype=complex)
    if order == 1:
        y, f = (a00, a01, a10, a11), gen.first
    else:
        v00, v11 = gen.diagonal(a00, a11, a01, a10)
        y, f = (a00, a01, a10, a11, v00, v11), gen.second

    if b.lam == 0.0 or not np.any(b.V10):
        return _decoupled(gen, a00, a11, a, U, t_samples)

    bound = blowup * np.maximum(np.linalg.norm(a, ord=2, axis=(1, 2)), 1e-300) * np.sqrt(n)
    out = [[None] * len(plan) for _ in range(B)]
    t = 0.0
    for j, m, h in plan:
        for k in range(1, m + 1):
            y = _rk4(f, y, h)
            if k % 64 == 0 and np.any(np.linalg.norm(y[0], axis=(1, 2)) > bound):
                raise StepTooLargeError(f"norm blowup near t = {t + k * h:.6g}; reduce dt")
        t = float(np.asarray(t_samples, dtype=float)[j])
        if np.any(np.linalg.norm(y[0], axis=(1, 2)) > bound):
            raise StepTooLargeError(f"norm blowup near t = {t:.6g}; reduce dt")
        A00 = U @ y[0] @ U.conj().T
        for i in range(B):
            out[i][j] = BlockObservable(A00[i], y[3][i].copy(), t)
    return out


def _decoupled(gen, a00, a11, a, U, t_samples):
    """Exact evolution when ``lambda V`` vanishes: every block just rotates."""
    out = [[] for _ in range(a.shape[0])]
    for t in np.asarray(t_samples, dtype=float):
        A00 = U @ (np.exp(gen.w00 * t) * a00) @ U.conj().T
        A11 = np.exp(gen.w11 * t) * a11
        for i in range(a.shape[0]):
            out[i].append(BlockObservable(A00[i], A11[i], float(t)))
    return out


def evolve_observable(spec: ModelSpec, grid: ReservoirGrid, a, t_samples, dt: float,
                      form: str = "corrected", order: int = 2):
    """Single-observable form of :func:`evolve_observables`."""
    return evolve_observables(spec, grid, np.asarray(a)[None], t_samples, dt, form, order)[0]


def form_consistency(spec: ModelSpec, grid: ReservoirGrid, observables, t_samples, dt: float,
                     form: str = "corrected") -> float:
    """Max ``|a_00|`` difference between the second-order and first-order integrations."""
    two = evolve_observables(spec, grid, observables, t_samples, dt, form, order=2)
    one = evolve_observables(spec, grid, observables, t_samples, dt, form, order=1)
    return max(float(np.max(np.abs(x.a00 - y.a00)))
               for rx, ry in zip(two, one) for x, y in zip(rx, ry))


def _schrodinger_snapshots(spec, grid, t_samples, dt):
    k = _step_counts(t_samples, dt)
    steps = max(1, int(k.max(initial=0)))
    table = tabulate_kernel(spec, dt, steps, Quadrature(grid))
    traj = solve_amplitude(spec, table, dt, steps)
    exc = reconstruct_excitation(spec, traj, grid)
    return [snapshot(traj, exc, float(j * dt)) for j in k]


def _check_snapshot(snap: KrausSnapshot, grid: ReservoirGrid):
    if snap.kraus.shape[0] not in (0, grid.n_nodes):
        raise GridMismatchError(
            f"snapshot has {snap.kraus.shape[0]} reservoir operators, grid has {grid.n_nodes} nodes")


def duality_defect(spec: ModelSpec, grid: ReservoirGrid, a, rho0, t: float, dt: float = 1e-3,
                   snap: KrausSnapshot | None = None, heisenberg_dt: float = 1e-2) -> float:
    """``|Tr(T_t(a) rho0) - Tr(a T_*t(rho0))|``.

    The Heisenberg side integrates the second-order equation with steps of
    at most ``heisenberg_dt``; the Schrodinger side is the Kraus map from the
    amplitude equation (step ``dt``) with the quadrature kernel of the same
    grid, or ``snap`` when given.
    """
    if snap is None:
        snap = _schrodinger_snapshots(spec, grid, [t], dt)[0]
    _check_snapshot(snap, grid)
    a = np.asarray(a, dtype=complex)
    heis = evolve_observable(spec, grid, a, [t], heisenberg_dt)[0].a00
    rho0 = np.asarray(rho0, dtype=complex)
    rho_t = evolve_density(rho0, snap)
    return float(abs(np.trace(heis @ rho0) - np.trace(a @ rho_t)))


def duality_table(spec: ModelSpec, grid: ReservoirGrid, observables, states, t_samples,
                  dt: float = 1e-3, heisenberg_dt: float = 1e-2):
    """All ``(t, observable, state)`` duality records, both pictures batched.

    Returns a list of dicts with keys ``t, observable, state,
    heisenberg_value, schrodinger_value, defect`` (indices 0-based).
    """
    observables = [np.asarray(x, dtype=complex) for x in observables]
    states = [np.asarray(r, dtype=complex) for r in states]
    heis = evolve_observables(spec, grid, np.array(observables), t_samples, heisenberg_dt)
    snaps = _schrodinger_snapshots(spec, grid, t_samples, dt)
    rows = []
    for j, t in enumerate(t_samples):
        for s, rho0 in enumerate(states):
            rho_t = evolve_density(rho0, snaps[j])
            for o, a in enumerate(observables):
                hv = complex(np.trace(heis[o][j].a00 @ rho0))
                sv = complex(np.trace(a @ rho_t))
                rows.append({"t": float(t), "observable": o, "state": s,
                             "heisenberg_value": hv, "schrodinger_value": sv,
                             "defect": float(abs(hv - sv))})
    return rows
