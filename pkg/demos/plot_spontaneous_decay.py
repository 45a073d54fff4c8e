"""
Spontaneous decay of a single level
===================================

A single level coupled to a Lorentzian reservoir (g = 1, kappa = 5) decays
non-exponentially at first and exponentially later.  The vacuum amplitude
solves a memory-kernel equation; for this profile it also solves a plain
second-order ODE, which gives an independent check.
"""

import numpy as np

from friedrichs import ClosedForm, Channel, LevelSystem, Lorentzian, ModelSpec
from friedrichs import solve_amplitude, tabulate_kernel
from friedrichs.resolvent import find_poles

spec = ModelSpec(LevelSystem((0.0,)), 1.0, (Channel(1, 1, Lorentzian(1.0, 5.0)),))

# the extended-support kernel is g^2 exp(-kappa |t|)
dt, M = 1e-3, 8000
table = tabulate_kernel(spec, dt, M, ClosedForm("extended"))
traj = solve_amplitude(spec, table, dt, M)

# a'' + kappa a' + lambda^2 g^2 a = 0 with a(0) = 1, a'(0) = 0
r1, r2 = np.roots([1.0, 5.0, 1.0])
def ode(t):
    return (r2 * np.exp(r1 * t) - r1 * np.exp(r2 * t)) / (r2 - r1)

for t in (0.5, 1.0, 2.0, 4.0, 8.0):
    a = traj.at(t)[0, 0]
    print(f"t = {t:4.1f}   a(t) = {a.real:+.8f}   ODE error {abs(a - ode(t)):.1e}")

# %%
# Late times are governed by the slowest resonance pole
slow = find_poles(spec)[0]
sel = traj.times >= 3.0
rate = -np.polyfit(traj.times[sel], np.log(np.abs(traj.samples[sel, 0, 0])), 1)[0]
print(f"slowest pole {slow.location.real:.6f}, residue {slow.residue[0, 0].real:.5f}")
print(f"fitted decay rate of |a| over t >= 3: {rate:.6f}")
