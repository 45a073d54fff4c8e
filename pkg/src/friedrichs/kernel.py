"""
Reservoir correlation functions and the memory kernel of the amplitude equation.

The kernel is

    K_kl(t) = sum_m exp(-i eps_m t) * c(f_mk, f_ml; t),
    c(f_A, f_B; t) = int f_A(w) conj(f_B(w)) exp(-i w t) dw,

without the factor ``lambda**2``, which the solver applies.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import exp1

from .model import (Channel, Gaussian, Lorentzian, ModelSpec, ReservoirGrid,
                    SpectralProfile, emission_amplitudes, require_valid)

__all__ = [
    "ClosedForm",
    "Quadrature",
    "ClosedFormUnavailable",
    "correlation",
    "memory_kernel",
    "tabulate_kernel",
    "KernelTable",
    "lorentzian_physical_correlation",
    "write_kernel_csv",
]


class ClosedFormUnavailable(ValueError):
    """No closed form exists for the requested profile pair and support."""


@dataclass(frozen=True)
class ClosedForm:
    """Analytic correlation.

    ``support="extended"`` integrates the density over the whole real line
    (Lorentzian: ``g^2 exp(-kappa|t| - i mu t)``; Gaussian:
    ``g^2 exp(-sigma^2 t^2/2 - i mu t)``).  ``support="physical"`` keeps
    ``omega >= 0`` and is available for Lorentzians through exponential
    integrals.
    """

    support: str = "extended"

    def __post_init__(self):
        if self.support not in ("extended", "physical"):
            raise ValueError("support must be 'extended' or 'physical'")


@dataclass(frozen=True)
class Quadrature:
    """Correlation by the quadrature rule of ``grid`` on ``[0, omega_max]``."""

    grid: ReservoirGrid


def _as_channel(x) -> Channel:
    if isinstance(x, Channel):
        return x
    if isinstance(x, SpectralProfile):
        return Channel(1, 1, x, 0.0)
    raise TypeError(f"expected Channel or SpectralProfile, got {type(x).__name__}")


# ---------------------------------------------------------------------------
# physical-support Lorentzian
# ---------------------------------------------------------------------------

_ASYMPTOTIC_RADIUS = 40.0


def _e1_scaled(s):
    """``exp(s) E1(s)`` for complex ``s``, principal branch, overflow-free."""
    s = np.asarray(s, dtype=complex)
    out = np.empty_like(s)
    big = np.abs(s) >= _ASYMPTOTIC_RADIUS
    small = ~big
    out[small] = np.exp(s[small]) * exp1(s[small])
    if np.any(big):
        sb = s[big]
        term = 1.0 / sb
        acc = term.copy()
        # smallest term near k ~ |s|; 60 terms is past it for |s| >= 40
        for k in range(1, 60):
            term = -term * k / sb
            acc += term
        out[big] = acc
    return out


def _half_line_cauchy(mu, sign, kappa, t):
    """``int_0^inf exp(-i w t) / (w - mu - i sign kappa) dw`` for ``t > 0``.

    Substituting ``s = i t (w - z)`` turns this into ``exp(s0)`` times the
    integral of ``exp(-s)/s`` along a vertical ray from ``s0 = -i z t``.
    Rotating onto the principal-branch ray of E1 picks up ``-2 pi i`` when
    the origin lies between the two rays.
    """
    re = sign * kappa * t
    im = -mu * t
    im = np.where(im == 0.0, 0.0, im)  # +0.0 selects the upper lip of the cut
    s0 = re + 1j * im
    val = _e1_scaled(s0)
    wrap = (re < 0) & (im < 0)
    return val - 2j * np.pi * np.exp(np.where(wrap, s0, 0.0)) * wrap


def lorentzian_physical_correlation(profile: Lorentzian, t):
    """``int_0^inf |g|^2 exp(-i w t) dw`` for a Lorentzian density."""
    t = np.asarray(t, dtype=float)
    out = np.empty(t.shape, dtype=complex)
    at0 = t == 0.0
    out[at0] = profile.mass()
    tp = np.abs(t[~at0])
    val = (_half_line_cauchy(profile.mu, +1, profile.kappa, tp)
           - _half_line_cauchy(profile.mu, -1, profile.kappa, tp)) / (2j * np.pi)
    val = profile.g**2 * val
    # c(-t) = conj(c(t)) for a real density
    neg = t[~at0] < 0
    out[~at0] = np.where(neg, np.conj(val), val)
    return out


# ---------------------------------------------------------------------------
# correlation
# ---------------------------------------------------------------------------


def _closed_form_same(profile: SpectralProfile, t, support):
    if isinstance(profile, Lorentzian):
        if support == "extended":
            return profile.g**2 * np.exp(-profile.kappa * np.abs(t) - 1j * profile.mu * t)
        return lorentzian_physical_correlation(profile, t)
    if isinstance(profile, Gaussian) and support == "extended":
        return profile.g**2 * np.exp(-0.5 * (profile.sigma * t) ** 2 - 1j * profile.mu * t)
    raise ClosedFormUnavailable(
        f"no closed form for {profile.kind} profile with {support} support")


def correlation(a, b, t, mode):
    """``int f_A(w) conj(f_B(w)) exp(-i w t) dw``.

    ``a`` and ``b`` are :class:`Channel` objects (carrying a phase) or bare
    profiles.  ``t`` may be a scalar or an array; a scalar returns a complex.
    """
    ca, cb = _as_channel(a), _as_channel(b)
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    if ca.profile.is_zero or cb.profile.is_zero:
        out = np.zeros(t.shape, dtype=complex)
    elif isinstance(mode, ClosedForm):
        if ca.profile != cb.profile:
            raise ClosedFormUnavailable("closed form requires identical profiles")
        out = ca.phase * np.conj(cb.phase) * _closed_form_same(ca.profile, t, mode.support)
    elif isinstance(mode, Quadrature):
        w, x = mode.grid.weights, mode.grid.nodes
        prod = w * ca.value(x) * np.conj(cb.value(x))
        out = np.exp(-1j * np.multiply.outer(t, x)) @ prod
    else:
        raise TypeError(f"unknown correlation mode {mode!r}")
    return complex(out) if scalar else out


def memory_kernel(spec: ModelSpec, t, mode):
    """Kernel matrix ``K(t)`` (shape ``(n, n)``, or ``(len(t), n, n)`` for arrays)."""
    require_valid(spec)
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = spec.n
    eps = spec.energies
    K = np.zeros((t.size, n, n), dtype=complex)
    if isinstance(mode, Quadrature):
        # same discretization as the oracle: K = sum_q w_q F_q^dag e^{-i(D+w_q)t} F_q
        grid = mode.grid
        F = emission_amplitudes(spec, grid.nodes)
        WF = np.sqrt(grid.weights)[:, None, None] * F
        if np.any(WF):
            for start in range(0, t.size, 512):
                ts = t[start:start + 512]
                ph = np.exp(-1j * (ts[:, None, None] * (grid.nodes[:, None] + eps[None, :])))
                K[start:start + 512] = np.einsum("qmk,tqm,qml->tkl", WF.conj(), ph, WF)
    else:
        chans = spec.channel_map()
        for (m, k), ca in chans.items():
            for l in range(1, n + 1):
                cb = chans.get((m, l))
                if cb is None:
                    continue
                K[:, k - 1, l - 1] += np.exp(-1j * eps[m - 1] * t) * correlation(ca, cb, t, mode)
    return K[0] if scalar else K


@dataclass(frozen=True, eq=False)
class KernelTable:
    dt: float
    samples: np.ndarray  # (M+1, n, n)
    mode: object = None

    @property
    def n_steps(self):
        return self.samples.shape[0] - 1

    @property
    def times(self):
        return self.dt * np.arange(self.samples.shape[0])

    def __getitem__(self, j):
        return self.samples[j]


def tabulate_kernel(spec: ModelSpec, dt: float, n_steps: int, mode) -> KernelTable:
    """Sample ``memory_kernel`` at ``t_j = j dt`` for ``j = 0..n_steps``."""
    if n_steps < 1:
        raise ValueError("need at least two samples")
    if not dt > 0:
        raise ValueError("dt must be positive")
    t = dt * np.arange(n_steps + 1)
    K = memory_kernel(spec, t, mode)
    K.setflags(write=False)
    return KernelTable(float(dt), K, mode)


def _fmt(x):
    return f"{x:.16e}"


def write_kernel_csv(table: KernelTable, path):
    n = table.samples.shape[1]
    header = ["t"]
    for k in range(1, n + 1):
        for l in range(1, n + 1):
            header += [f"re_K_{k}_{l}", f"im_K_{k}_{l}"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, K in zip(table.times, table.samples):
            row = [_fmt(t)]
            for z in K.ravel():
                row += [_fmt(z.real), _fmt(z.imag)]
            w.writerow(row)


def oscillation_nodes(omega_max: float, t_max: float) -> int:
    """Node count giving ten Gauss-Legendre nodes per period at ``t_max``."""
    return max(2, math.ceil(10.0 * omega_max * t_max / (2.0 * math.pi)))
