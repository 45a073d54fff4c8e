"""
Acceptance runs at their stated tolerances.

Each test records a PASS/FAIL line that the terminal summary prints under
"acceptance criteria", then asserts.
"""

from __future__ import annotations

import numpy as np
import pytest

from conftest import ode_amplitude, record, reference_model, two_level_model
from friedrichs.dynmap import certify
from friedrichs.heisenberg import duality_table, evolve_observables
from friedrichs.kernel import ClosedForm, Quadrature, tabulate_kernel
from friedrichs.model import grid_for, hermitian_basis, probe_states
from friedrichs.oracle import build, exact_amplitude
from friedrichs.propagator import reconstruct_excitation, solve_amplitude
from friedrichs.resolvent import find_poles, invert_laplace

DT = 1e-3
T_MAX = 5.0
M = int(round(T_MAX / DT))
SAMPLES = np.round(np.linspace(0.1, T_MAX, 50), 12)
MODELS = {"reference": reference_model(), "two-level": two_level_model()}


@pytest.fixture(scope="module")
def amplitudes():
    out = {}
    for name, spec in MODELS.items():
        table = tabulate_kernel(spec, DT, M, ClosedForm("physical"))
        out[name] = solve_amplitude(spec, table, DT, M)
    return out


@pytest.fixture(scope="module")
def certificates(amplitudes):
    reps = {}
    for name, spec in MODELS.items():
        traj = amplitudes[name]
        for N in (100, 200, 400, 800):
            exc = reconstruct_excitation(spec, traj, grid_for(spec, N, T_MAX), stride=100)
            reps[name, N] = certify(traj, exc, SAMPLES)
    return reps


def test_complete_positivity(certificates):
    worst = {name: certificates[name, 400].min_choi_eig for name in MODELS}
    ok = all(v >= -1e-8 for v in worst.values())
    record("1 complete positivity", ok,
           ", ".join(f"{k} min Choi eig {v:.2e}" for k, v in worst.items()) + " (>= -1e-8)")
    assert ok


def test_trace_preservation(certificates):
    parts, ok = [], True
    for name in MODELS:
        d = [certificates[name, N].max_trace_defect for N in (100, 200, 400, 800)]
        good = d[2] <= 1e-4 and all(a > b for a, b in zip(d, d[1:]))
        ok &= good
        parts.append(f"{name} N=400 defect {d[2]:.2e}, N-sweep " + " > ".join(f"{x:.1e}" for x in d))
    record("2 trace preservation", ok, "; ".join(parts))
    assert ok


def test_volterra_against_oracle():
    spec = MODELS["reference"]
    grid = grid_for(spec, 400, T_MAX)
    mode = Quadrature(grid)
    runs = {}
    for dt in (4e-3, 2e-3, 1e-3):
        m = int(round(T_MAX / dt))
        runs[dt] = solve_amplitude(spec, tabulate_kernel(spec, dt, m, mode), dt, m)
    fine = runs[1e-3]
    exact = exact_amplitude(build(spec, grid), fine.times)
    gap = float(np.max(np.linalg.norm(fine.samples - exact, ord=2, axis=(1, 2))))
    # compare on the coarse time lattice
    coarse = runs[4e-3].times
    idx2 = np.round(coarse / 2e-3).astype(int)
    idx1 = np.round(coarse / 1e-3).astype(int)
    d1 = np.max(np.abs(runs[4e-3].samples - runs[2e-3].samples[idx2]))
    d2 = np.max(np.abs(runs[2e-3].samples[idx2] - fine.samples[idx1]))
    ratio = float(d1 / d2)
    ok = gap <= 1e-4 and 3.5 <= ratio <= 4.5
    record("3 Volterra vs oracle", ok,
           f"max gap {gap:.2e} (<= 1e-4), step-halving ratio {ratio:.2f} (in [3.5, 4.5])")
    assert ok


def test_closed_form_regression():
    spec = MODELS["reference"]
    m = 2000
    traj = solve_amplitude(spec, tabulate_kernel(spec, DT, m, ClosedForm("extended")), DT, m)
    errs = [abs(traj.at(t)[0, 0] - ode_amplitude(t)) for t in (0.5, 1.0, 2.0)]
    ok = max(errs) <= 1e-5
    record("4 closed-form regression", ok,
           "errors at t=0.5,1,2: " + ", ".join(f"{e:.1e}" for e in errs) + " (<= 1e-5)")
    assert ok


def test_resolvent_route_equivalence():
    spec = MODELS["reference"]
    traj = solve_amplitude(spec, tabulate_kernel(spec, DT, M, ClosedForm("extended")), DT, M)
    t = SAMPLES
    inv = invert_laplace(spec, t).samples
    vol = np.array([traj.at(tk) for tk in t])
    gap = float(np.max(np.abs(inv - vol)))
    ok = gap <= 1e-4
    record("5 resolvent route equivalence", ok, f"max |Bromwich - Volterra| {gap:.2e} (<= 1e-4)")
    assert ok


def fitted_rate(spec, t_end, window, squared=False):
    m = int(round(t_end / DT))
    traj = solve_amplitude(spec, tabulate_kernel(spec, DT, m, ClosedForm("extended")), DT, m)
    sel = (traj.times >= window[0] - 1e-12) & (traj.times <= window[1] + 1e-12)
    y = np.abs(traj.samples[sel, 0, 0])
    if squared:
        y = y**2
    return -np.polyfit(traj.times[sel], np.log(y), 1)[0]


def test_pole_decay_consistency():
    spec = reference_model(kappa=5.0)
    poles = find_poles(spec)
    slow = poles[0].location
    roots = np.roots([1, 5, 1])
    rate = fitted_rate(spec, 10.0, (3.0, 10.0))
    err = abs(rate - abs(slow.real)) / abs(slow.real)
    ok = abs(slow - roots.real.max()) < 1e-10 and err <= 0.01
    record("6 pole/decay consistency", ok,
           f"slowest pole {slow.real:.6f}, fitted rate {rate:.6f}, relative error {err:.1e} (<= 1e-2)")
    assert ok


def test_heisenberg_schrodinger_duality():
    spec = MODELS["two-level"]
    grid = grid_for(spec, 100, 2.0)
    obs = hermitian_basis(2)
    times = [0.5, 1.0, 2.0]
    rows = duality_table(spec, grid, obs, probe_states(2), times, dt=DT)
    worst = max(r["defect"] for r in rows)
    one = evolve_observables(spec, grid, obs, times, 1e-2, order=1)
    two = evolve_observables(spec, grid, obs, times, 1e-2, order=2)
    form = max(float(np.max(np.abs(x.a00 - y.a00))) for rx, ry in zip(one, two) for x, y in zip(rx, ry))
    ok = worst <= 1e-4 and form <= 1e-6
    record("7 Heisenberg/Schrodinger duality", ok,
           f"max defect {worst:.2e} over {len(rows)} triples (<= 1e-4), "
           f"second vs first order {form:.1e} (<= 1e-6)")
    assert ok


def test_markovian_limit():
    spec = reference_model(kappa=50.0)
    slow = find_poles(spec)[0].location
    target = 2 * abs(slow.real)
    rate = fitted_rate(spec, 20.0, (2.0, 20.0), squared=True)
    err = abs(rate - target) / target
    ok = err <= 0.02
    record("8 Markovian limit", ok,
           f"fitted |a|^2 rate {rate:.6f} vs 2|Re p| {target:.6f}, relative error {err:.1e} (<= 2e-2)")
    assert ok
