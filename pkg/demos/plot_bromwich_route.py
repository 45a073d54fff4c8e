"""
The same amplitude from the Laplace domain
==========================================

The vacuum amplitude is the inverse Laplace transform of G(p)^{-1}.  A
vertical contour to the right of every singularity reproduces the time
stepper; continuing G onto the second sheet exposes the resonance poles.
"""

import numpy as np

from friedrichs import ClosedForm, Channel, LevelSystem, Lorentzian, ModelSpec
from friedrichs import solve_amplitude, tabulate_kernel
from friedrichs.resolvent import BromwichContour, eval_G, find_poles, invert_laplace

spec = ModelSpec(LevelSystem((0.0, 1.0)), 1.0, (Channel(1, 2, Lorentzian(1.0, 5.0)),))

print("G(1) =")
print(np.round(eval_G(spec, 1.0).value, 6))

for pole in find_poles(spec):
    print(f"pole {pole.location:.8f}  residue trace {np.trace(pole.residue):.5f}")

# %%
# Contour inversion against the Volterra solution
dt, M = 1e-3, 5000
traj = solve_amplitude(spec, tabulate_kernel(spec, dt, M, ClosedForm("extended")), dt, M)
t = np.array([0.1, 0.5, 1.0, 2.5, 5.0])
inv = invert_laplace(spec, t, BromwichContour(sigma=0.1))
for tk, A in zip(t, inv.samples):
    print(f"t = {tk:3.1f}   |A_22| = {abs(A[1, 1]):.8f}   "
          f"difference {np.max(np.abs(A - traj.at(tk))):.1e}")
