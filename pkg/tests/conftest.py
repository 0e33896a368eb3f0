from fractions import Fraction

import numpy as np
import pytest

from relinv.projective_core import PointConfig

import frozen


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def cross_section():
    return PointConfig([(0, -1), (1, 1), (1, 0), (0, 0)])


@pytest.fixture
def exact_cross_section():
    return PointConfig([[Fraction(a), Fraction(b)] for a, b in [(0, -1), (1, 1), (1, 0), (0, 0)]],
                       exact=True)


@pytest.fixture
def frozen_config():
    return PointConfig([[Fraction(x), Fraction(y)] for x, y in frozen.POINTS], exact=True)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(acceptance_log.LINES):
            terminalreporter.write_line(acceptance_log.LINES[number])
