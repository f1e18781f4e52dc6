import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from collapse_lab.coherent import CoherentFamily, PhaseGrid, PositionGrid

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def default_family():
    return CoherentFamily.build(PositionGrid(), PhaseGrid())


@pytest.fixture(scope="session")
def wide_family():
    return CoherentFamily.build(PositionGrid(40.0, 801), PhaseGrid(16.0, 65))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
