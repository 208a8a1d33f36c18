import numpy as np
import pytest

from homodyne_cm.gaussian import random_state

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def random_states():
    rng = np.random.default_rng(12345)
    return [random_state(rng) for _ in range(100)]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
