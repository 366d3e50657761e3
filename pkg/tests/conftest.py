import numpy as np
import pytest

from kleincp.geometry import KleinPoint, sample_points


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def origin():
    """``w = -i, z = 0`` for N = 2."""
    return KleinPoint(-1j, [0.0])


@pytest.fixture
def generic_point():
    """``w = 1 - i, z = 0.5`` for N = 2."""
    return KleinPoint(1 - 1j, [0.5])


def random_points(N, count, seed=0):
    return sample_points(N, count, np.random.default_rng(seed))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
