from __future__ import annotations

import numpy as np
import pytest

from friedrichs.model import Channel, LevelSystem, Lorentzian, ModelSpec

# acceptance verdicts, filled by test_acceptance and printed at the end of the run
ACCEPTANCE = {}


def record(criterion: str, passed: bool, detail: str):
    ACCEPTANCE[criterion] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda s: int(s.split()[0])):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


def reference_model(kappa=5.0, g=1.0, lam=1.0):
    return ModelSpec(LevelSystem((0.0,)), lam, (Channel(1, 1, Lorentzian(g, kappa, 0.0)),))


def two_level_model(lam=1.0):
    return ModelSpec(LevelSystem((0.0, 1.0)), lam, (Channel(1, 2, Lorentzian(1.0, 5.0, 0.0)),))


def ode_amplitude(t, kappa=5.0, g=1.0, lam=1.0):
    """a'' + kappa a' + lam^2 g^2 a = 0, a(0) = 1, a'(0) = 0."""
    d = np.sqrt(complex(kappa**2 - 4 * lam**2 * g**2))
    r1, r2 = (-kappa + d) / 2, (-kappa - d) / 2
    return (r2 * np.exp(r1 * t) - r1 * np.exp(r2 * t)) / (r2 - r1)


@pytest.fixture
def ref():
    return reference_model()


@pytest.fixture
def two():
    return two_level_model()
