from __future__ import annotations

import numpy as np
import pytest
from scipy.linalg import expm

from friedrichs.model import (Channel, LevelSystem, Lorentzian, ModelSpec, grid_for, hermitian_basis,
                              make_grid)
from friedrichs.oracle import (MAX_DIMENSION, OracleDimensionError, build, check_dimension,
                              exact_amplitude, exact_heisenberg, initial_observable)

# vacuum amplitude at t = 1 for the reference model on the N = 400 Gauss-Legendre grid
# (omega_max = 2 pi 400 / 50), frozen from eigendecomposition of the 401 x 401 matrix
A_REF_T1 = 0.920925538788454 + 0.0748438371948421j


def test_small_oracle_matches_matrix_exponential():
    spec = ModelSpec(LevelSystem((0.3,)), 0.7, (Channel(1, 1, Lorentzian(1.0, 2.0, 1.0)),))
    grid = make_grid("uniform_trapezoid", 2, 3.0)
    H = build(spec, grid)
    assert H.dim == 3
    f = np.sqrt(grid.weights * spec.channels[0].profile.density(grid.nodes))
    M = np.array([[0.3, 0.7 * f[0], 0.7 * f[1]],
                  [0.7 * f[0], 0.3 + grid.nodes[0], 0],
                  [0.7 * f[1], 0, 0.3 + grid.nodes[1]]])
    np.testing.assert_allclose(H.matrix, M, atol=1e-15)
    for t in (0.4, 2.5):
        np.testing.assert_allclose(exact_amplitude(H, t), expm(-1j * t * M)[:1, :1], atol=1e-13)


def test_basis_layout_of_the_coupling_block():
    chans = (Channel(1, 2, Lorentzian(1.0, 5.0), 30.0),)
    spec = ModelSpec(LevelSystem((0.0, 1.0)), 0.5, chans)
    grid = make_grid("gauss_legendre", 3, 10.0)
    H = build(spec, grid).matrix
    np.testing.assert_allclose(H, H.conj().T)
    f = chans[0].value(grid.nodes)
    for q in range(3):
        # <e_1, 1_q | H | e_2, vac> = lambda sqrt(w_q) conj(f_12(w_q))
        assert H[2 + 2 * q, 1] == pytest.approx(0.5 * np.sqrt(grid.weights[q]) * np.conj(f[q]))
        assert H[2 + 2 * q + 1, 0] == 0
        assert H[2 + 2 * q + 1, 2 + 2 * q + 1] == pytest.approx(grid.nodes[q] + 1.0)


def test_reference_amplitude_is_frozen(ref):
    H = build(ref, grid_for(ref, 400, 5.0))
    assert exact_amplitude(H, 1.0)[0, 0] == pytest.approx(A_REF_T1, abs=1e-12)


def test_array_times_and_unitarity(two):
    H = build(two, make_grid("gauss_legendre", 40, 20.0))
    ts = np.array([0.0, 0.5, 3.0])
    A = exact_amplitude(H, ts)
    assert A.shape == (3, 2, 2)
    np.testing.assert_allclose(A[0], np.eye(2), atol=1e-13)
    U = H.propagator(3.0)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(H.dim), atol=1e-12)


def test_dimension_gate():
    assert check_dimension(2, 100) == 202
    with pytest.raises(OracleDimensionError, match="oracle dimension gate exceeded"):
        check_dimension(2, MAX_DIMENSION)


def test_heisenberg_identity_is_conserved(two):
    H = build(two, make_grid("gauss_legendre", 30, 20.0))
    X = exact_heisenberg(H, np.eye(2), 1.3)
    np.testing.assert_allclose(X.a00, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(X.a11, np.eye(60), atol=1e-12)


def test_heisenberg_and_schrodinger_agree_on_the_oracle(two):
    H = build(two, make_grid("gauss_legendre", 30, 20.0))
    rho = np.array([[0.3, 0.2j], [-0.2j, 0.7]])
    U = H.propagator(0.8)
    psi = np.zeros((H.dim, H.dim), complex)
    psi[:2, :2] = rho
    full = U @ psi @ U.conj().T
    for a in hermitian_basis(2):
        lhs = np.trace(exact_heisenberg(H, a, 0.8).a00 @ rho)
        rhs = np.trace(initial_observable(a, 30) @ full)
        assert lhs == pytest.approx(rhs, abs=1e-12)


def test_grid_refinement_converges(ref):
    ts = np.linspace(0.1, 5, 50)
    A = {N: exact_amplitude(build(ref, grid_for(ref, N, 5.0)), ts) for N in (100, 200, 400, 800)}
    d = [np.max(np.abs(A[N] - A[2 * N])) for N in (100, 200, 400)]
    assert d[0] > d[1] > d[2]
