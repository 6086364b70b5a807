import math

import numpy as np
import pytest

from qwscatter import CoinField

TWO_PI = 2 * math.pi

_LINES = []


def theta_grid(n):
    return [TWO_PI * k / n for k in range(n)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=[("example1", 1), ("example2", 1), ("example1", 2), ("example2", 2)],
                ids=lambda p: f"{p[0]}-n0={p[1]}")
def example_coin(request):
    return CoinField.builtin(*request.param)


@pytest.fixture
def coin1():
    return CoinField.builtin("example1", 1)


@pytest.fixture(scope="session")
def criterion_log():
    return _LINES


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
