"""
Laplace-domain analysis of the vacuum-sector propagator.

    <e_k, G(p) e_l> = delta_kl p + i H_eff[k, l]
                      + lambda^2 sum_m int f_mk(w) conj(f_ml(w)) / (p + i eps_m + i w) dw

and ``A(t)`` is the inverse Laplace transform of ``G(p)^{-1}``.  Decaying
resonances are zeros of ``det G`` continued through the imaginary axis into
``Re p < 0`` (second sheet); exp(p t) with ``Re p < 0`` decays.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.special import wofz

from .kernel import ClosedForm, Quadrature
from .model import (Gaussian, Lorentzian, ModelSpec, effective_system_hamiltonian,
                    emission_amplitudes, require_valid)
from .propagator import AmplitudeTrajectory

__all__ = [
    "ResolventMatrix",
    "ResonancePole",
    "NotContinuable",
    "ContourConvergenceError",
    "BromwichContour",
    "eval_G",
    "find_poles",
    "invert_laplace",
    "spectral_scale",
    "default_search_box",
    "poles_to_json",
]

log = logging.getLogger(__name__)

PHYSICAL = "physical"
SECOND = "second"


class NotContinuable(ValueError):
    """The profile has no closed-form continuation onto the second sheet."""


class ContourConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ResolventMatrix:
    p: complex
    value: np.ndarray
    sheet: str


@dataclass(frozen=True, eq=False)
class ResonancePole:
    location: complex
    residue: np.ndarray
    residual: float
    iterations: int
    seed: complex

    def to_dict(self):
        return {
            "re": self.location.real,
            "im": self.location.imag,
            "residual": self.residual,
            "residue": [[[float(z.real), float(z.imag)] for z in row] for row in self.residue],
        }


def _sheet(sheet):
    s = str(sheet).lower()
    if s in ("physical", "phys"):
        return PHYSICAL
    if s in ("second", "secondsheet", "second_sheet", "2"):
        return SECOND
    raise ValueError(f"unknown sheet {sheet!r}")


def _lorentz_self(profile: Lorentzian, z, sheet):
    """``int rho(w) / (z + i w) dw`` over the real line, rho the Lorentzian density."""
    # Re z > 0: close below, pole w = mu - i kappa. Re z < 0 on the physical
    # sheet: close above. The second sheet continues the Re z > 0 branch.
    g2 = profile.g**2
    right = g2 / (z + 1j * profile.mu + profile.kappa)
    if sheet == SECOND:
        return right, -g2 / (z + 1j * profile.mu + profile.kappa) ** 2
    left = g2 / (z + 1j * profile.mu - profile.kappa)
    val = np.where(np.real(z) > 0, right, left)
    der = np.where(np.real(z) > 0, -right**2 / g2, -left**2 / g2)
    return val, der


def _gauss_self(profile: Gaussian, z):
    # int N(w)/(z + i w) dw = -i int N(w)/(w - i z) dw ; Stieltjes via Faddeeva
    s = math.sqrt(2.0) * profile.sigma
    zeta = 1j * z
    up = np.real(z) > 0
    arg = np.where(up, (zeta - profile.mu) / s, (np.conj(zeta) - profile.mu) / s)
    w = wofz(arg)
    stj = 1j * math.sqrt(math.pi) / s * w
    stj = np.where(up, stj, np.conj(stj))
    val = -1j * profile.g**2 * stj
    return val


def _self_energy(spec: ModelSpec, p, sheet, mode):
    """``lambda^2`` times the integral part of G and its p-derivative.

    ``p`` may be an array; results then carry a leading axis.
    """
    n = spec.n
    eps = spec.energies
    p = np.asarray(p, dtype=complex)
    S = np.zeros(p.shape + (n, n), dtype=complex)
    dS = np.zeros_like(S)
    if isinstance(mode, Quadrature):
        if sheet == SECOND:
            raise NotContinuable("quadrature G has no second sheet")
        grid = mode.grid
        F = emission_amplitudes(spec, grid.nodes)
        wF = grid.weights[:, None, None] * F
        den = p[..., None, None] + 1j * (eps[None, :] + grid.nodes[:, None])  # (..., q, m)
        S = np.einsum("qmk,...qm,qml->...kl", F.conj(), 1.0 / den, wF)
        dS = -np.einsum("qmk,...qm,qml->...kl", F.conj(), 1.0 / den**2, wF)
    elif isinstance(mode, ClosedForm):
        if mode.support != "extended":
            raise NotContinuable("closed-form G is implemented for extended support only")
        chans = spec.channel_map()
        for (m, k), ca in chans.items():
            for l in range(1, n + 1):
                cb = chans.get((m, l))
                if cb is None or ca.profile.is_zero:
                    continue
                if ca.profile != cb.profile:
                    raise NotContinuable("closed-form G requires identical profiles per row")
                z = p + 1j * eps[m - 1]
                phase = ca.phase * np.conj(cb.phase)
                prof = ca.profile
                if isinstance(prof, Lorentzian):
                    v, d = _lorentz_self(prof, z, sheet)
                elif isinstance(prof, Gaussian) and sheet == PHYSICAL:
                    v = _gauss_self(prof, z)
                    h = 1e-6 * np.maximum(1.0, np.abs(z))
                    d = (_gauss_self(prof, z + h) - _gauss_self(prof, z - h)) / (2 * h)
                else:
                    raise NotContinuable(f"{prof.kind} profile is not continuable to the second sheet")
                S[..., k - 1, l - 1] += phase * v
                dS[..., k - 1, l - 1] += phase * d
    else:
        raise TypeError(f"unknown mode {mode!r}")
    lam2 = spec.coupling**2
    return lam2 * S, lam2 * dS


def _G_and_derivative(spec, p, sheet, mode, H=None):
    if H is None:
        H = effective_system_hamiltonian(spec)
    S, dS = _self_energy(spec, p, sheet, mode)
    eye = np.eye(spec.n)
    p = np.asarray(p, dtype=complex)[..., None, None]
    return p * eye + 1j * H + S, eye + dS


def eval_G(spec: ModelSpec, p, sheet="physical", mode=ClosedForm("extended")) -> ResolventMatrix:
    require_valid(spec)
    sheet = _sheet(sheet)
    G, _ = _G_and_derivative(spec, complex(p), sheet, mode)
    return ResolventMatrix(complex(p), G, sheet)


# ---------------------------------------------------------------------------
# poles
# ---------------------------------------------------------------------------


def spectral_scale(spec: ModelSpec) -> float:
    H = effective_system_hamiltonian(spec)
    scale = max(1.0, float(np.max(np.abs(np.linalg.eigvalsh(H)))))
    for c in spec.channels:
        prof = c.profile
        width = getattr(prof, "kappa", None) or getattr(prof, "sigma", None)
        if width is not None:
            scale = max(scale, width + abs(prof.mu))
        elif hasattr(prof, "nodes"):
            scale = max(scale, prof.nodes[-1])
        if hasattr(prof, "g"):
            scale = max(scale, abs(spec.coupling) * prof.g)
    return scale


def default_search_box(spec: ModelSpec):
    """``(re_min, re_max, im_min, im_max)`` covering all plausible decaying poles."""
    s = spectral_scale(spec)
    return (-2.0 * s - 1.0, 0.0, -2.0 * s - 1.0, 2.0 * s + 1.0)


def _self_energy_poles(spec, sheet, mode):
    """Locations where the continued Lorentzian self-energy rows blow up."""
    if sheet != SECOND or not isinstance(mode, ClosedForm):
        return []
    rows = {}
    for c in spec.channels:
        if isinstance(c.profile, Lorentzian):
            rows[c.i] = c.profile
    eps = spec.energies
    return [complex(-1j * eps[m - 1] - 1j * prof.mu - prof.kappa) for m, prof in rows.items()]


def _residue(spec, p0, sheet, mode, radius, n_points=64):
    theta = 2 * np.pi * np.arange(n_points) / n_points
    acc = 0.0
    H = effective_system_hamiltonian(spec)
    for th in theta:
        z = radius * np.exp(1j * th)
        G, _ = _G_and_derivative(spec, p0 + z, sheet, mode, H)
        acc = acc + np.linalg.inv(G) * z
    return acc / n_points


def find_poles(spec: ModelSpec, search_box=None, seed_count=5, sheet="second",
               mode=ClosedForm("extended"), tol=1e-10, max_iter=100):
    """Zeros of ``det G`` with ``Re p < 0``, by Newton iteration from a seed grid.

    Newton steps use ``d log det G = tr(G^{-1} G')``.  Known poles of the
    continued self-energy are cleared and roots already found are deflated,
    so every seed runs on ``det G * prod(p - pole) / prod(p - root)``.  A
    converged root is kept when ``|det G|`` is below ``tol`` times the
    product of the row norms of ``G`` and it lies inside the (slightly
    enlarged) search box.  Residues of ``G^{-1}`` come from the trapezoid
    rule on a small circle.
    """
    require_valid(spec)
    sheet = _sheet(sheet)
    if search_box is None:
        search_box = default_search_box(spec)
    re0, re1, im0, im1 = map(float, search_box)
    if re1 > 0:
        raise ValueError("search box must lie in the closed left half-plane")
    H = effective_system_hamiltonian(spec)
    pad = 1e-6 * max(1.0, re1 - re0, im1 - im0)
    found = []
    clear = _self_energy_poles(spec, sheet, mode)
    seeds = [complex(x, y) for y in np.linspace(im0, im1, seed_count)
             for x in np.linspace(re0, re1, seed_count)]
    for seed in seeds:
        p = seed
        ok = False
        for it in range(1, max_iter + 1):
            try:
                with np.errstate(divide="ignore", invalid="ignore"):
                    G, dG = _G_and_derivative(spec, p, sheet, mode, H)
                    dlog = np.trace(np.linalg.solve(G, dG))
                    dlog += sum(1.0 / (p - c) for c in clear)
                    dlog -= sum(1.0 / (p - r[0]) for r in found)
                    step = 1.0 / dlog
            except (np.linalg.LinAlgError, ZeroDivisionError):
                ok = True  # G singular: landed on the root
                break
            if not np.isfinite(step):
                break
            p = p - step
            if abs(step) <= 1e-14 * max(1.0, abs(p)):
                ok = True
                break
        if not ok:
            continue
        if abs(p.imag) <= 1e-13 * abs(p):
            p = complex(p.real, 0.0)
        if not (re0 - pad <= p.real <= re1 + pad and im0 - pad <= p.imag <= im1 + pad):
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            G, _ = _G_and_derivative(spec, p, sheet, mode, H)
        if not np.all(np.isfinite(G)):
            continue
        scale = float(np.prod(np.linalg.norm(G, axis=1))) or 1.0
        scale = max(scale, float(np.prod([max(1.0, abs(p))] * spec.n)))
        resid = abs(np.linalg.det(G))
        if resid > tol * scale:
            continue
        if p.real >= -1e-12 * max(1.0, abs(p)):
            continue  # not decaying
        if any(abs(p - q[0]) <= 1e-8 * max(1.0, abs(p)) for q in found):
            continue
        if any(abs(p - c) <= 1e-8 * max(1.0, abs(p)) for c in clear):
            continue
        found.append((p, resid, it, seed))
    poles = []
    locs = [f[0] for f in found]
    for p, resid, it, seed in found:
        others = [abs(p - q) for q in locs if q != p]
        radius = min([1e-3 * max(1.0, abs(p))] + [0.25 * d for d in others])
        res = _residue(spec, p, sheet, mode, radius)
        poles.append(ResonancePole(p, res, float(resid), it, seed))
    poles.sort(key=lambda r: (-r.location.real, r.location.imag))
    if not poles:
        log.warning("no pole converged inside the search box %s", search_box)
    return poles


def poles_to_json(poles) -> str:
    return json.dumps([r.to_dict() for r in poles], indent=1)


# ---------------------------------------------------------------------------
# inverse Laplace
# ---------------------------------------------------------------------------


def _nodes(mode):
    return mode.grid.n_nodes if isinstance(mode, Quadrature) else 1


@dataclass(frozen=True)
class BromwichContour:
    """Vertical line ``Re p = sigma`` truncated to ``|Im p| <= half_height``.

    ``step=None`` picks the spacing so that the aliased copy of the signal,
    damped by ``exp(-2 pi sigma / step)``, is below ``alias_tol``.
    ``half_height=None`` uses 200 times :func:`spectral_scale`.
    """

    sigma: float = 0.1
    half_height: float | None = None
    step: float | None = None
    alias_tol: float = 1e-9
    tail_tol: float = 1e-6


def invert_laplace(spec: ModelSpec, t_samples, contour: BromwichContour = BromwichContour(),
                   mode=ClosedForm("extended")) -> AmplitudeTrajectory:
    """``A(t) = (2 pi i)^{-1} int exp(p t) G(p)^{-1} dp`` on a vertical line.

    The free resolvent ``(p + i H_eff)^{-1}``, whose transform is known
    exactly, is subtracted before summation; the remainder decays like
    ``|p|^{-3}`` so symmetric truncation converges quickly.
    """
    require_valid(spec)
    t = np.atleast_1d(np.asarray(t_samples, dtype=float))
    if np.any(t < 0):
        raise ValueError("times must be non-negative")
    sigma = contour.sigma
    if not sigma > 0:
        raise ValueError("contour abscissa must be positive")
    L = contour.half_height or 200.0 * spectral_scale(spec)
    h = contour.step or 2 * math.pi * sigma / math.log(2.0 / contour.alias_tol)
    period = 2 * math.pi / h
    if t.max(initial=0.0) >= period:
        raise ContourConvergenceError(
            f"t = {t.max()} exceeds the aliasing period {period:.3g} of the contour")
    n = spec.n
    H = effective_system_hamiltonian(spec)
    m = int(math.ceil(L / h))
    y = h * np.arange(-m, m + 1)
    p = sigma + 1j * y
    R = np.empty((y.size, n, n), dtype=complex)
    eye = np.eye(n)
    chunk = max(1, 2_000_000 // (n * max(1, _nodes(mode))))
    for a in range(0, y.size, chunk):
        pk = p[a:a + chunk]
        G, _ = _G_and_derivative(spec, pk, PHYSICAL, mode, H)
        R[a:a + chunk] = np.linalg.inv(G) - np.linalg.inv(pk[:, None, None] * eye + 1j * H)
    # remainder ~ c / |y|^3 beyond the cut: tail ~ |R(end)| L / (2 pi) per pair of ends
    tail = (np.linalg.norm(R[0], 2) + np.linalg.norm(R[-1], 2)) * L / (4 * np.pi)
    if tail > contour.tail_tol:
        raise ContourConvergenceError(
            f"Bromwich tail estimate {tail:.3g} exceeds {contour.tail_tol:.3g}; raise half_height")
    wts = np.full(y.size, h / (2 * np.pi))
    wts[0] *= 0.5
    wts[-1] *= 0.5
    E = np.exp(np.multiply.outer(t, p)) * wts  # (T, S)
    rem = np.einsum("ts,sij->tij", E, R)
    evals, evecs = np.linalg.eigh(H)
    free = np.einsum("ia,ta,ja->tij", evecs, np.exp(-1j * np.multiply.outer(t, evals)), evecs.conj())
    A = free + rem
    dt = None
    if t.size > 1 and np.allclose(np.diff(t), t[1] - t[0]):
        dt = float(t[1] - t[0])
    return AmplitudeTrajectory(t, A, dt)
