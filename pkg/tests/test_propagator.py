from __future__ import annotations

import json
import math

import numpy as np
import pytest
from scipy.linalg import expm

from friedrichs.kernel import ClosedForm, Quadrature, tabulate_kernel
from friedrichs.model import Channel, LevelSystem, Lorentzian, ModelSpec, grid_for, make_grid
from friedrichs.oracle import build, exact_amplitude
from conftest import ode_amplitude
from friedrichs.propagator import (_phi_weights, norm_defect, reconstruct_excitation,
                                   solve_amplitude, time_index, trajectory_dump,
                                   write_amplitude_csv)


def test_kernel_free_two_level_matches_matrix_exponential():
    spec = ModelSpec(LevelSystem((0.0, 1.0)), 0.5, shift=[[0, 1], [1, 0]])
    traj = solve_amplitude(spec, None, 0.01, 300)
    H = np.array([[0, 0.5], [0.5, 1.0]])
    for t in (0.5, 1.7, 3.0):
        np.testing.assert_allclose(traj.at(t), expm(-1j * t * H), atol=1e-8)


def test_zero_coupling_ignores_the_kernel(two):
    spec = two.replace(coupling=0.0)
    table = tabulate_kernel(spec, 0.01, 100, ClosedForm())
    traj = solve_amplitude(spec, table, 0.01, 100)
    np.testing.assert_allclose(traj.at(1.0), np.diag([1.0, np.exp(-1j)]), atol=1e-14)


def test_reference_amplitude_matches_closed_form_ode(ref):
    dt, M = 1e-3, 2000
    traj = solve_amplitude(ref, tabulate_kernel(ref, dt, M, ClosedForm()), dt, M)
    assert traj.samples[0, 0, 0] == 1.0
    assert abs(traj.at(1.0)[0, 0] - ode_amplitude(1.0)) <= 1e-5


def test_underdamped_amplitude_matches_closed_form_ode():
    spec = ModelSpec(LevelSystem((0.0,)), 2.0, (Channel(1, 1, Lorentzian(1.0, 1.0)),))
    dt, M = 1e-3, 3000
    traj = solve_amplitude(spec, tabulate_kernel(spec, dt, M, ClosedForm()), dt, M)
    for t in (0.5, 1.5, 3.0):
        assert abs(traj.at(t)[0, 0] - ode_amplitude(t, 1.0, 1.0, 2.0)) <= 2e-5


def test_solver_checks_its_inputs(ref):
    table = tabulate_kernel(ref, 0.01, 10, ClosedForm())
    with pytest.raises(ValueError, match="sampled at"):
        solve_amplitude(ref, table, 0.02, 5)
    with pytest.raises(ValueError, match="need 20"):
        solve_amplitude(ref, table, 0.01, 20)
    with pytest.raises(ValueError):
        solve_amplitude(ref, table, 0.01, 0)
    with pytest.raises(ValueError):
        solve_amplitude(ref, table, -0.01, 5)


def test_solver_tracks_the_oracle_on_a_shared_grid(two):
    grid = make_grid("gauss_legendre", 120, 30.0)
    dt, M = 1e-3, 1000
    traj = solve_amplitude(two, tabulate_kernel(two, dt, M, Quadrature(grid)), dt, M)
    H = build(two, grid)
    ts = np.array([0.25, 0.5, 1.0])
    exact = exact_amplitude(H, ts)
    for t, e in zip(ts, exact):
        assert np.linalg.norm(traj.at(t) - e, 2) < 1e-5
    assert traj.contraction_excess() < 1e-6


def test_reconstruction_matches_oracle_one_quantum_block(two):
    grid = make_grid("gauss_legendre", 80, 25.0)
    dt, M = 1e-3, 1000
    traj = solve_amplitude(two, tabulate_kernel(two, dt, M, Quadrature(grid)), dt, M)
    exc = reconstruct_excitation(two, traj, grid, stride=250)
    np.testing.assert_allclose(exc.times, [0, 0.25, 0.5, 0.75, 1.0])
    U = build(two, grid).propagator(1.0)
    block = U[2:, :2].reshape(80, 2, 2)
    np.testing.assert_allclose(exc.kraus_operators(4), block, atol=2e-6)


def test_norm_defect_of_reference_run(ref):
    grid = grid_for(ref, 400, 1.0)
    dt, M = 1e-3, 1000
    traj = solve_amplitude(ref, tabulate_kernel(ref, dt, M, ClosedForm("physical")), dt, M)
    exc = reconstruct_excitation(ref, traj, grid, stride=100)
    nd = norm_defect(traj, exc)
    assert nd[0] == 0.0
    assert nd[-1] <= 1e-4


def test_stride_keeps_the_last_sample(ref):
    grid = make_grid("gauss_legendre", 10, 5.0)
    traj = solve_amplitude(ref, tabulate_kernel(ref, 0.1, 7, ClosedForm()), 0.1, 7)
    exc = reconstruct_excitation(ref, traj, grid, stride=3)
    np.testing.assert_allclose(exc.times, [0.0, 0.3, 0.6, 0.7])


def test_time_index_rejects_unsampled_times(ref):
    traj = solve_amplitude(ref, None, 0.1, 10)
    assert time_index(traj, 0.3) == 3
    with pytest.raises(ValueError):
        time_index(traj, 0.35)


def test_phi_weights_are_continuous_across_the_series_switch():
    for z in (0.5e-2 * np.exp(1j * 0.3), 1e-2 * 1j, 2e-2 * 1j):
        # direct numerical quadrature of int_0^1 e^{zx} dx and int_0^1 x e^{zx} dx
        x = np.linspace(0, 1, 20001)
        f0 = np.trapezoid(np.exp(z * x), x)
        f1 = np.trapezoid(x * np.exp(z * x), x)
        p0, p1 = _phi_weights(np.array([z]))
        assert abs(p0[0] - f0) < 1e-9 and abs(p1[0] - f1) < 1e-9


def test_amplitude_csv_and_dump(tmp_path, two):
    traj = solve_amplitude(two, None, 0.5, 2)
    path = tmp_path / "a.csv"
    write_amplitude_csv(traj, path)
    lines = path.read_text().splitlines()
    assert lines[0].split(",")[:3] == ["t", "re_A_1_1", "im_A_1_1"]
    assert len(lines) == 4
    row = [float(x) for x in lines[3].split(",")]
    assert row[7] == pytest.approx(math.cos(1.0)) and row[8] == pytest.approx(-math.sin(1.0))
    doc = json.loads(trajectory_dump(traj))
    assert doc["n"] == 2 and len(doc["samples"]) == 3
    assert doc["samples"][0]["A"][0][0] == [1.0, 0.0]


def test_coupling_and_strength_trade_off_exactly(two):
    # lambda -> 2 lambda with every g -> g / 2 leaves lambda^2 K unchanged
    half = two.replace(coupling=2.0, channels=(Channel(1, 2, Lorentzian(0.5, 5.0)),))
    dt, M = 1e-2, 200
    a = solve_amplitude(two, tabulate_kernel(two, dt, M, ClosedForm()), dt, M)
    b = solve_amplitude(half, tabulate_kernel(half, dt, M, ClosedForm()), dt, M)
    np.testing.assert_allclose(a.samples, b.samples, rtol=0, atol=1e-14)
