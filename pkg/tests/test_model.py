from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from friedrichs.model import (Channel, Gaussian, InvalidModelError, LevelSystem, Lorentzian,
                              ModelSpec, Tabulated, default_omega_max,
                              effective_system_hamiltonian, emission_amplitudes, grid_for,
                              hermitian_basis, make_grid, probe_states, require_valid, validate)


def test_reference_model_is_valid(ref):
    assert validate(ref).violations == []
    assert validate(ref)


def test_degenerate_spectrum_is_reported():
    spec = ModelSpec(LevelSystem((1.0, 1.0)), 1.0)
    assert "degenerate spectrum" in validate(spec).violations


def test_non_hermitian_shift_is_reported():
    spec = ModelSpec(LevelSystem((0.0, 1.0)), 1.0, shift=[[0, 1], [0, 0]])
    assert "shift not Hermitian" in validate(spec).violations


def test_report_collects_every_violation():
    bad = Channel(3, 1, Lorentzian(-1.0, 0.0))
    spec = ModelSpec(LevelSystem((1.0, 1.0)), math.nan, (bad, bad))
    v = validate(spec).violations
    assert "degenerate spectrum" in v
    assert "lambda must be finite" in v
    assert any("out of range" in s for s in v)
    assert any("duplicate channel" in s for s in v)
    assert any("strength g" in s for s in v)
    assert any("half-width" in s for s in v)
    with pytest.raises(InvalidModelError):
        require_valid(spec)


def test_tabulated_violations():
    assert Tabulated((0.0, 1.0), (1.0, 2.0)).violations() == []
    assert Tabulated((1.0, 0.5), (1.0, 2.0)).violations()
    assert Tabulated((-1.0, 0.5), (1.0, 2.0)).violations()
    assert Tabulated((0.0, 0.5), (1.0, -2.0)).violations()
    assert Tabulated((0.0,), (1.0,)).violations()


def test_effective_hamiltonian_single_level(ref):
    np.testing.assert_array_equal(effective_system_hamiltonian(ref), [[0.0]])


def test_effective_hamiltonian_with_shift():
    spec = ModelSpec(LevelSystem((0.0, 1.0)), 0.5, shift=[[0, 1], [1, 0]])
    np.testing.assert_allclose(effective_system_hamiltonian(spec), [[0, 0.5], [0.5, 1]])


def test_vacuum_model_has_diagonal_hamiltonian(two):
    np.testing.assert_array_equal(effective_system_hamiltonian(two), np.diag([0.0, 1.0]))


def test_trapezoid_grid_example():
    g = make_grid("uniform_trapezoid", 3, 1.0)
    assert g.nodes.tolist() == [0.0, 0.5, 1.0]
    assert g.weights.tolist() == [0.25, 0.5, 0.25]


def test_grid_arguments_are_checked():
    with pytest.raises(ValueError):
        make_grid("gauss_legendre", 1, 1.0)
    with pytest.raises(ValueError):
        make_grid("gauss_legendre", 4, -1.0)
    with pytest.raises(ValueError, match="unknown grid scheme"):
        make_grid("simpson", 4, 1.0)
    assert make_grid("GL", 4, 1.0).scheme == "gauss_legendre"


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 40), om=st.floats(0.1, 100.0),
       coeffs=st.lists(st.floats(-2, 2), min_size=1, max_size=80))
def test_gauss_legendre_is_exact_to_degree_2n_minus_1(n, om, coeffs):
    g = make_grid("gauss_legendre", n, om)
    c = np.array(coeffs[: 2 * n])
    # integrate sum c_k (x/om)^k over [0, om]
    exact = om * np.sum(c / (np.arange(c.size) + 1))
    approx = g.weights @ np.polynomial.polynomial.polyval(g.nodes / om, c)
    assert abs(approx - exact) <= 1e-11 * max(1.0, om * np.sum(np.abs(c)))
    assert np.all(g.weights > 0)
    assert np.all((g.nodes > 0) & (g.nodes <= om))


def test_trapezoid_integrates_linear_functions():
    g = make_grid("uniform_trapezoid", 7, 3.0)
    assert g.weights @ (2 * g.nodes + 1) == pytest.approx(12.0, rel=1e-14)


@pytest.mark.parametrize("prof", [Lorentzian(1.0, 5.0), Lorentzian(2.0, 1.0, 3.0),
                                  Gaussian(1.0, 2.0, 1.0)])
def test_tail_rule_leaves_the_advertised_mass(prof):
    cut = prof.tail_omega_max(1e-10)
    tail = prof.mass() - prof.mass(cut)
    assert tail == pytest.approx(1e-10 * prof.mass(), rel=1e-3, abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(g=st.floats(0.1, 3), kappa=st.floats(0.1, 10), mu=st.floats(-10, 10))
def test_lorentzian_mass_on_the_half_line(g, kappa, mu):
    expected = g * g * (0.5 + math.atan(mu / kappa) / math.pi)
    assert Lorentzian(g, kappa, mu).mass() == pytest.approx(expected, rel=1e-12, abs=1e-14)


def test_default_cutoff_is_capped_by_resolution(ref):
    # uncapped Lorentzian tail rule: mu + kappa / tan(pi * 1e-10 / 2)
    assert default_omega_max(ref) == pytest.approx(5.0 / math.tan(math.pi * 0.5e-10), rel=1e-9)
    assert default_omega_max(ref, 400, 5.0) == pytest.approx(2 * math.pi * 400 / 50)
    assert grid_for(ref, 400, 5.0).omega_max == pytest.approx(50.26548245743669)


def test_default_cutoff_without_channels():
    assert default_omega_max(ModelSpec(LevelSystem((0.0,)), 1.0)) == 1.0


def test_tabulated_profile_is_linear_interpolation():
    p = Tabulated((0.0, 2.0), (1.0, 3.0))
    np.testing.assert_allclose(p.density([0.0, 1.0, 2.0, 5.0]), [1.0, 2.0, 3.0, 0.0])
    assert p.mass() == pytest.approx(4.0)
    assert p.mass(1.0) == pytest.approx(1.5)
    assert p.is_zero is False
    assert Tabulated((0.0, 1.0), (0.0, 0.0)).is_zero


def test_emission_amplitudes_conjugate_the_form_factor():
    ch = Channel(1, 2, Lorentzian(1.0, 2.0), phase_degrees=90.0)
    spec = ModelSpec(LevelSystem((0.0, 1.0)), 1.0, (ch,))
    w = np.array([0.0, 1.0, 4.0])
    F = emission_amplitudes(spec, w)
    assert F.shape == (3, 2, 2)
    np.testing.assert_allclose(F[:, 0, 1], -1j * np.sqrt(ch.profile.density(w)), atol=1e-15)
    assert np.count_nonzero(F[:, 1, :]) == 0 and np.count_nonzero(F[:, 0, 0]) == 0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_probe_sets_span_operator_space(n):
    basis = hermitian_basis(n)
    states = probe_states(n)
    assert len(basis) == len(states) == n * n
    for X in basis:
        np.testing.assert_allclose(X, X.conj().T)
    for r in states:
        assert np.trace(r).real == pytest.approx(1.0)
        assert np.linalg.eigvalsh(r)[0] > -1e-14
    assert np.linalg.matrix_rank(np.array([b.ravel() for b in basis])) == n * n
    assert np.linalg.matrix_rank(np.array([r.ravel() for r in states])) == n * n


def test_replace_keeps_other_fields(ref):
    other = ref.replace(coupling=0.5)
    assert other.coupling == 0.5 and other.channels == ref.channels
