import numpy as np
import pytest

from hysir.preisach import gaussian_density, uniform_density
from hysir.sir import ModelParams

BASE = dict(beta=10.8, gamma=0.5994, mu=0.0006, v_nat=0.0)


@pytest.fixture(scope="session")
def base():
    return ModelParams(**BASE)


@pytest.fixture(scope="session")
def gauss_cycle():
    return gaussian_density(0.0002, 0.0055, 0.0009)


@pytest.fixture(scope="session")
def gauss_wide():
    return gaussian_density(0.0002, 0.0055, 0.1)


@pytest.fixture(scope="session")
def gauss_mid():
    return gaussian_density(0.0002, 0.0055, 0.01)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


class BruteBank:
    """Independent relay-field oracle: grid of relays updated by the relay law."""

    def __init__(self, n, I0=0.0):
        g = (np.arange(n) + 0.5) / n
        a1, a2 = np.meshgrid(g, g, indexing="ij")
        keep = a1 < a2
        self.a1, self.a2 = a1[keep], a2[keep]
        # start from the history 0 -> I0
        self.state = self.a2 <= I0

    def feed(self, x):
        self.state = np.where(x >= self.a2, True, np.where(x <= self.a1, False, self.state))


@pytest.fixture
def brute_bank():
    return BruteBank


@pytest.fixture(scope="session")
def cycle_traj(base, gauss_cycle):
    from hysir.preisach import staircase_init
    from hysir.simulate import integrate
    from hysir.sir import SirState

    return integrate(base, gauss_cycle, SirState(1e-5, 1 - 1e-5), staircase_init(1e-5), 20000.0)


@pytest.fixture(scope="session")
def wide_traj(base, gauss_wide):
    from hysir.preisach import staircase_init
    from hysir.simulate import integrate
    from hysir.sir import SirState

    return integrate(base, gauss_wide, SirState(1e-5, 1 - 1e-5), staircase_init(1e-5), 5000.0)


# acceptance lines, echoed in the terminal summary so they survive output capture
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
