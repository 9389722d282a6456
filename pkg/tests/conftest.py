import math

import numpy as np
import pytest

from mirrorlamb.model import ideal_array


def one_qubit_r(delta, gamma0=1.0, gphi=0.0):
    """Weak-field reflection of a single qubit at the mirror antinode.

    Independent oracle: <sigma^-> = Omega / (delta + i (gamma0 + gphi)) up to
    a phase, giving r = |1 - 2 gamma0 / (gamma0 + gphi - i delta)|.
    """
    return abs(1.0 - 2.0 * gamma0 / (gamma0 + gphi - 1j * delta))


def bloch_excited(delta, gamma0, rabi):
    """Steady excited population of a driven two-level atom.

    Convention of the generator: population decay 2 gamma0, Rabi term
    Omega (s+ + s-), so rho_ee = Omega^2 / (delta^2 + gamma0^2 + 2 Omega^2).
    """
    return rabi**2 / (delta**2 + gamma0**2 + 2.0 * rabi**2)


@pytest.fixture
def node_pair():
    return ideal_array([0.0, 1.25], 0.2)


@pytest.fixture
def antinode_pair():
    return ideal_array([0.0, 1.0], 0.2)


def random_hermitian(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = a + a.conj().T
    return h / np.trace(h).real if abs(np.trace(h)) > 1e-3 else h


SQ3 = math.sqrt(3.0)


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
