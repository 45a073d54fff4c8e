"""
Problem definition for an n-level system coupled to a vacuum boson field.

The reservoir enters only through scalar frequency profiles ``g(omega)`` on
``[0, inf)``, one per transition channel ``(i, j)``.  Channel ``(i, j)`` is
the process ``|e_j> -> |e_i>`` accompanied by the emission of one quantum.
Indices are 1-based throughout the public API.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import erfc, erfcinv

__all__ = [
    "SpectralProfile",
    "Lorentzian",
    "Gaussian",
    "Tabulated",
    "Channel",
    "LevelSystem",
    "ModelSpec",
    "ReservoirGrid",
    "ValidationReport",
    "InvalidModelError",
    "validate",
    "require_valid",
    "effective_system_hamiltonian",
    "make_grid",
    "emission_amplitudes",
    "default_omega_max",
    "grid_for",
    "hermitian_basis",
    "probe_states",
    "as_level_system",
    "HERMITIAN_TOL",
    "TAIL_TOL",
]

HERMITIAN_TOL = 1e-12
TAIL_TOL = 1e-10


class InvalidModelError(ValueError):
    """Raised when an operation receives a model that fails validation."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid model: " + "; ".join(self.violations))


# ---------------------------------------------------------------------------
# spectral profiles
# ---------------------------------------------------------------------------


class SpectralProfile:
    """Base class of a frequency profile.

    Subclasses provide ``density(omega) = |g(omega)|**2`` on ``omega >= 0``.
    The amplitude ``g(omega)`` itself is taken real and non-negative; channel
    phases are carried by :class:`Channel`.
    """

    kind = "abstract"

    def density(self, omega):
        raise NotImplementedError

    def amplitude(self, omega):
        return np.sqrt(self.density(omega))

    def mass(self, omega_max=math.inf):
        """Integral of the density over ``[0, omega_max]``."""
        raise NotImplementedError

    def tail_omega_max(self, tol=TAIL_TOL):
        """Smallest cutoff whose tail mass is below ``tol`` times the total."""
        raise NotImplementedError

    def violations(self):
        return []

    @property
    def is_zero(self):
        return False

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Lorentzian(SpectralProfile):
    """``|g|^2 = g^2 (kappa/pi) / ((omega - mu)^2 + kappa^2)``.

    On the full real line the correlation function is
    ``g^2 exp(-kappa |t| - i mu t)``.
    """

    g: float
    kappa: float
    mu: float = 0.0

    kind = "lorentzian"

    def density(self, omega):
        omega = np.asarray(omega, dtype=float)
        return self.g**2 * (self.kappa / np.pi) / ((omega - self.mu) ** 2 + self.kappa**2)

    def _cdf_from(self, omega):
        # mass on [omega, inf)
        return self.g**2 * (0.5 - np.arctan((omega - self.mu) / self.kappa) / np.pi)

    def mass(self, omega_max=math.inf):
        return float(self._cdf_from(0.0) - self._cdf_from(omega_max))

    def tail_omega_max(self, tol=TAIL_TOL):
        frac = tol * self.mass() / self.g**2
        return float(self.mu + self.kappa / math.tan(math.pi * frac))

    def violations(self):
        out = []
        if not (self.g > 0 and math.isfinite(self.g)):
            out.append("lorentzian strength g must be positive")
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            out.append("lorentzian half-width kappa must be positive")
        if not math.isfinite(self.mu):
            out.append("lorentzian center mu must be finite")
        return out

    def to_dict(self):
        return {"kind": self.kind, "g": self.g, "kappa": self.kappa, "mu": self.mu}


@dataclass(frozen=True)
class Gaussian(SpectralProfile):
    """``|g|^2 = g^2 exp(-(omega - mu)^2 / (2 sigma^2)) / (sqrt(2 pi) sigma)``."""

    g: float
    sigma: float
    mu: float = 0.0

    kind = "gaussian"

    def density(self, omega):
        omega = np.asarray(omega, dtype=float)
        x = (omega - self.mu) / self.sigma
        return self.g**2 * np.exp(-0.5 * x * x) / (math.sqrt(2 * math.pi) * self.sigma)

    def _cdf_from(self, omega):
        return 0.5 * self.g**2 * erfc((omega - self.mu) / (math.sqrt(2.0) * self.sigma))

    def mass(self, omega_max=math.inf):
        return float(self._cdf_from(0.0) - self._cdf_from(omega_max))

    def tail_omega_max(self, tol=TAIL_TOL):
        target = 2.0 * tol * self.mass() / self.g**2
        return float(self.mu + math.sqrt(2.0) * self.sigma * erfcinv(target))

    def violations(self):
        out = []
        if not (self.g > 0 and math.isfinite(self.g)):
            out.append("gaussian strength g must be positive")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            out.append("gaussian width sigma must be positive")
        if not math.isfinite(self.mu):
            out.append("gaussian center mu must be finite")
        return out

    def to_dict(self):
        return {"kind": self.kind, "g": self.g, "sigma": self.sigma, "mu": self.mu}


@dataclass(frozen=True, eq=False)
class Tabulated(SpectralProfile):
    """Piecewise-linear ``|g|^2`` through ``(nodes, values)``, zero outside."""

    nodes: tuple
    values: tuple

    kind = "tabulated"

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(float(x) for x in self.nodes))
        object.__setattr__(self, "values", tuple(float(x) for x in self.values))

    def density(self, omega):
        omega = np.asarray(omega, dtype=float)
        return np.interp(omega, self.nodes, self.values, left=0.0, right=0.0)

    def mass(self, omega_max=math.inf):
        hi = min(omega_max, self.nodes[-1])
        if hi <= self.nodes[0]:
            return 0.0
        x = np.array([w for w in self.nodes if w < hi] + [hi])
        return float(np.trapezoid(self.density(x), x))

    def tail_omega_max(self, tol=TAIL_TOL):
        return self.nodes[-1]

    @property
    def is_zero(self):
        return all(v == 0.0 for v in self.values)

    def violations(self):
        out = []
        if len(self.nodes) < 2 or len(self.nodes) != len(self.values):
            out.append("tabulated profile needs >= 2 nodes and matching values")
            return out
        if any(b <= a for a, b in zip(self.nodes, self.nodes[1:])):
            out.append("tabulated nodes must be strictly ascending")
        if self.nodes[0] < 0:
            out.append("tabulated nodes must be >= 0")
        if any(v < 0 or not math.isfinite(v) for v in self.values):
            out.append("tabulated values must be non-negative")
        return out

    def to_dict(self):
        return {"kind": self.kind, "nodes": list(self.nodes), "values": list(self.values)}


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Channel:
    """Coupling ``|e_i><e_j| (x) a*(f_ij) + h.c.`` with ``f_ij = e^{i phase} g``."""

    i: int
    j: int
    profile: SpectralProfile
    phase_degrees: float = 0.0

    @property
    def phase(self):
        return complex(np.exp(1j * np.deg2rad(self.phase_degrees)))

    def value(self, omega):
        """The form factor ``f_ij(omega)`` (complex)."""
        return self.phase * self.profile.amplitude(omega)


@dataclass(frozen=True)
class LevelSystem:
    energies: tuple

    def __post_init__(self):
        object.__setattr__(self, "energies", tuple(float(e) for e in self.energies))

    @property
    def n(self):
        return len(self.energies)


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Full problem definition: ``H = diag(eps) (x) 1 + 1 (x) H_R + coupling * V``.

    ``shift`` is the optional vacuum block ``P0 V P0`` in system units.  For a
    vacuum field it vanishes identically; a nonzero value is a user override.
    """

    system: LevelSystem
    coupling: float
    channels: tuple = ()
    shift: np.ndarray | None = None

    def __post_init__(self):
        if not isinstance(self.system, LevelSystem):
            object.__setattr__(self, "system", LevelSystem(self.system))
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "coupling", float(self.coupling))
        if self.shift is not None:
            s = np.array(self.shift, dtype=complex)
            s.setflags(write=False)
            object.__setattr__(self, "shift", s)

    @property
    def n(self):
        return self.system.n

    @property
    def energies(self):
        return np.array(self.system.energies)

    def channel_map(self):
        return {(c.i, c.j): c for c in self.channels}

    def replace(self, **kw):
        fields = dict(system=self.system, coupling=self.coupling,
                      channels=self.channels, shift=self.shift)
        fields.update(kw)
        return ModelSpec(**fields)


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok


def validate(spec: ModelSpec) -> ValidationReport:
    """Collect every invariant violation of ``spec``; never raises."""
    out = []
    n = spec.n
    eps = spec.system.energies
    if n < 1:
        out.append("system needs at least one level")
    if any(not math.isfinite(e) for e in eps):
        out.append("energies must be finite")
    if len(set(eps)) != len(eps):
        out.append("degenerate spectrum")
    if not math.isfinite(spec.coupling):
        out.append("lambda must be finite")
    seen = set()
    for c in spec.channels:
        if not (1 <= c.i <= n and 1 <= c.j <= n):
            out.append(f"channel ({c.i},{c.j}) index out of range 1..{n}")
        if (c.i, c.j) in seen:
            out.append(f"duplicate channel ({c.i},{c.j})")
        seen.add((c.i, c.j))
        if not math.isfinite(c.phase_degrees):
            out.append(f"channel ({c.i},{c.j}) phase must be finite")
        out.extend(f"channel ({c.i},{c.j}): {v}" for v in c.profile.violations())
    if spec.shift is not None:
        s = spec.shift
        if s.shape != (n, n):
            out.append(f"shift must be {n}x{n}")
        elif not np.all(np.isfinite(s)):
            out.append("shift must be finite")
        elif np.max(np.abs(s - s.conj().T), initial=0.0) > HERMITIAN_TOL:
            out.append("shift not Hermitian")
    return ValidationReport(out)


def require_valid(spec: ModelSpec) -> ModelSpec:
    report = validate(spec)
    if not report.ok:
        raise InvalidModelError(report.violations)
    return spec


def effective_system_hamiltonian(spec: ModelSpec) -> np.ndarray:
    """Vacuum-sector block ``diag(eps) + coupling * shift``."""
    require_valid(spec)
    h = np.diag(spec.energies).astype(complex)
    if spec.shift is not None:
        h = h + spec.coupling * spec.shift
    return 0.5 * (h + h.conj().T)


def emission_amplitudes(spec: ModelSpec, omega) -> np.ndarray:
    """Matrix elements of ``P1 V P0`` at the frequencies ``omega``.

    Returns ``F`` with shape ``(len(omega), n, n)`` where ``F[q, m, i]`` is the
    amplitude for ``|e_i> (x) vac -> |e_m> (x) |1_omega_q>``.  Since
    ``a*(f)`` creates the one-quantum wave function ``conj(f)``, this is
    ``conj(f_mi(omega_q))``.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    F = np.zeros((omega.size, spec.n, spec.n), dtype=complex)
    for c in spec.channels:
        if c.profile.is_zero:
            continue
        F[:, c.i - 1, c.j - 1] = np.conj(c.value(omega))
    return F


# ---------------------------------------------------------------------------
# reservoir grid
# ---------------------------------------------------------------------------

SCHEMES = ("uniform_trapezoid", "gauss_legendre")


@dataclass(frozen=True, eq=False)
class ReservoirGrid:
    scheme: str
    n_nodes: int
    omega_max: float
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self):
        return self.n_nodes


def _normalize_scheme(scheme):
    key = str(scheme).lower().replace("-", "_")
    aliases = {"uniformtrapezoid": "uniform_trapezoid", "trapezoid": "uniform_trapezoid",
               "gausslegendre": "gauss_legendre", "gl": "gauss_legendre"}
    key = aliases.get(key, key)
    if key not in SCHEMES:
        raise ValueError(f"unknown grid scheme {scheme!r}; expected one of {SCHEMES}")
    return key


def make_grid(scheme, n_nodes: int, omega_max: float) -> ReservoirGrid:
    """Quadrature nodes and weights on ``[0, omega_max]``.

    >>> g = make_grid("uniform_trapezoid", 3, 1.0)
    >>> g.nodes.tolist(), g.weights.tolist()
    ([0.0, 0.5, 1.0], [0.25, 0.5, 0.25])
    """
    scheme = _normalize_scheme(scheme)
    if int(n_nodes) != n_nodes or n_nodes < 2:
        raise ValueError("grid needs at least 2 nodes")
    if not (omega_max > 0 and math.isfinite(omega_max)):
        raise ValueError("omega_max must be positive and finite")
    n_nodes = int(n_nodes)
    if scheme == "uniform_trapezoid":
        nodes = np.linspace(0.0, omega_max, n_nodes)
        h = omega_max / (n_nodes - 1)
        weights = np.full(n_nodes, h)
        weights[0] = weights[-1] = 0.5 * h
    else:
        x, w = leggauss(n_nodes)
        nodes = 0.5 * omega_max * (x + 1.0)
        weights = 0.5 * omega_max * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return ReservoirGrid(scheme, n_nodes, float(omega_max), nodes, weights)


def default_omega_max(spec: ModelSpec, n_nodes: int | None = None, t_max: float | None = None,
                      tol: float = TAIL_TOL) -> float:
    """Cutoff from the tail rule, capped so a grid resolves the largest time.

    The tail rule picks the smallest ``omega_max`` with relative tail mass
    below ``tol`` for every channel.  When ``n_nodes`` and ``t_max`` are
    given, the result is capped at ``2 pi n_nodes / (10 t_max)`` (ten nodes
    per period of ``exp(-i omega t_max)``); Lorentzian tails otherwise push the
    cutoff to ~1e10.
    """
    cut = 0.0
    for c in spec.channels:
        if not c.profile.is_zero:
            cut = max(cut, c.profile.tail_omega_max(tol))
    if cut <= 0.0:
        cut = 1.0
    if n_nodes is not None and t_max is not None and t_max > 0:
        cut = min(cut, 2.0 * math.pi * n_nodes / (10.0 * t_max))
    return float(cut)


def grid_for(spec: ModelSpec, n_nodes: int, t_max: float, scheme="gauss_legendre",
             omega_max: float | None = None) -> ReservoirGrid:
    if omega_max is None:
        omega_max = default_omega_max(spec, n_nodes, t_max)
    return make_grid(scheme, n_nodes, omega_max)


def hermitian_basis(n: int) -> list:
    """The n^2 symmetrized matrix units: E_kk, (E_kl+E_lk)/2, i(E_kl-E_lk)/2."""
    out = []
    for k in range(n):
        e = np.zeros((n, n), complex)
        e[k, k] = 1.0
        out.append(e)
    for k in range(n):
        for l in range(k + 1, n):
            s = np.zeros((n, n), complex)
            s[k, l] = s[l, k] = 0.5
            a = np.zeros((n, n), complex)
            a[k, l] = 0.5j
            a[l, k] = -0.5j
            out.extend([s, a])
    return out


def probe_states(n: int) -> list:
    """n^2 density matrices spanning the operator space."""
    out = []
    eye = np.eye(n)
    for k in range(n):
        out.append(np.outer(eye[k], eye[k]).astype(complex))
    for k in range(n):
        for l in range(k + 1, n):
            for v in ((eye[k] + eye[l]) / math.sqrt(2), (eye[k] + 1j * eye[l]) / math.sqrt(2)):
                out.append(np.outer(v, v.conj()))
    return out


def as_level_system(energies: Sequence[float]) -> LevelSystem:
    return LevelSystem(tuple(energies))
