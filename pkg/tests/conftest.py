import numpy as np
import pytest

from revbody.model import SystemConfig


@pytest.fixture
def std():
    """a = (1, 2, 3), controls (1, 1, 1), eps = 0."""
    return SystemConfig(1.0, 2.0, 3.0, 1.0, 1.0, 1.0)


@pytest.fixture
def std0():
    """Free body with a = (1, 2, 3)."""
    return SystemConfig(1.0, 2.0, 3.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_config(rng, epsilon=0.0, controls=True):
    while True:
        a = np.sort(rng.uniform(0.2, 4.0, 3))
        if np.min(np.diff(a)) > 0.05:
            break
    ctrl = rng.uniform(-2.0, 2.0, 3) if controls else np.zeros(3)
    return SystemConfig(*a, *ctrl, epsilon)


_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the lines are printed in the terminal summary."""

    def record(number, name, passed, detail):
        _CRITERIA.append((number, name, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(_CRITERIA, key=lambda c: c[0]):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  [{number:2d}] {name}: {detail}")
