import numpy as np
import pytest

from diracmap.fields import GridSpec
from diracmap.metric import wormhole_conformal_factor

ACCEPTANCE_LINES = []


@pytest.fixture
def wormhole():
    return wormhole_conformal_factor(10.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20260419)


@pytest.fixture
def wide_grid():
    return GridSpec(-128.0, 128.0, 2048)


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
