import numpy as np
import pytest

from ringheom.bath import BathSpec, pade_decompose
from ringheom.grid import RingParams, make_grid


@pytest.fixture
def ring():
    return RingParams(mass=0.5, radius=1.0, charge=-1.0, flux_bar=0.0)


@pytest.fixture
def small_grid():
    return make_grid(16, 9)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def hot_bath():
    return BathSpec(eta=0.01, gamma=1.0, beta=0.2)


@pytest.fixture
def cold_bath():
    return BathSpec(eta=1.0, gamma=1.0, beta=2.5)


@pytest.fixture
def pade4():
    return pade_decompose(2.5, 4)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for the acceptance summary."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def _report(number: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        lines.append((number, line))
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
