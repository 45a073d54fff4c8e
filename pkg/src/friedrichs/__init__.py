"""
Non-Markovian reduced dynamics of an n-level system in a vacuum boson field.

The interaction is kept in the Friedrichs form (vacuum <-> one quantum), so
the dynamics stays on ``C^n (x) vac + C^n (x) one-quantum``.  Modules:

model       problem definition, profiles, reservoir grids
kernel      correlation functions and the memory kernel
propagator  Volterra solver for A(t), one-quantum amplitudes
dynmap      Kraus form, Choi matrix, CP/TP certificate
resolvent   G(p), resonance poles, Bromwich inversion
heisenberg  block Heisenberg equations and duality checks
oracle      exact diagonalization of the discretized Hamiltonian
cli         command-line driver
"""

from .dynmap import ChoiMatrix, CertificationReport, KrausSnapshot, certify, choi, snapshot
from .kernel import ClosedForm, Quadrature, memory_kernel, tabulate_kernel
from .model import (Channel, Gaussian, LevelSystem, Lorentzian, ModelSpec, Tabulated,
                    grid_for, make_grid, validate)
from .modelfile import load_model, preset
from .propagator import reconstruct_excitation, solve_amplitude

__version__ = "0.1.0"

__all__ = [
    "Channel", "Gaussian", "LevelSystem", "Lorentzian", "ModelSpec", "Tabulated",
    "make_grid", "grid_for", "validate",
    "ClosedForm", "Quadrature", "memory_kernel", "tabulate_kernel",
    "solve_amplitude", "reconstruct_excitation",
    "KrausSnapshot", "ChoiMatrix", "CertificationReport", "snapshot", "choi", "certify",
    "load_model", "preset",
]
