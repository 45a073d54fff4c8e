"""
Certifying the reduced map of a two-level emitter
=================================================

The excited level 2 of a two-level system emits into a Lorentzian reservoir
and relaxes to level 1.  The reduced map is built in Kraus form from the
vacuum amplitude and the one-quantum amplitudes on a frequency grid; its
Choi matrix must be positive and its trace defect small.
"""

import numpy as np

from friedrichs import Channel, ClosedForm, LevelSystem, Lorentzian, ModelSpec
from friedrichs import certify, grid_for, reconstruct_excitation, solve_amplitude, tabulate_kernel
from friedrichs.dynmap import evolve_density, snapshot

spec = ModelSpec(LevelSystem((0.0, 1.0)), 1.0, (Channel(1, 2, Lorentzian(1.0, 5.0)),))
dt, M = 1e-3, 3000
traj = solve_amplitude(spec, tabulate_kernel(spec, dt, M, ClosedForm("physical")), dt, M)

# the grid only enters the reconstruction of the emitted field
for N in (50, 100, 200, 400):
    exc = reconstruct_excitation(spec, traj, grid_for(spec, N, M * dt), stride=500)
    rep = certify(traj, exc, [0.5, 1.0, 2.0, 3.0])
    print(f"N = {N:3d}   min Choi eig {rep.min_choi_eig:+.1e}   "
          f"max trace defect {rep.max_trace_defect:.1e}   passed {rep.passed}")

# %%
# Populations of the excited state relaxing into the ground state
rho0 = np.diag([0.0, 1.0])
for t in (0.0, 1.0, 2.0, 3.0):
    rho = evolve_density(rho0, snapshot(traj, exc, t))
    print(f"t = {t:.1f}   p1 = {rho[0, 0].real:.6f}   p2 = {rho[1, 1].real:.6f}")
