import math

import pytest

from maxsum import distengine as de
from maxsum.gengamma import GenGammaParams


@pytest.fixture(scope="session")
def half_normal():
    return GenGammaParams.half_normal()


@pytest.fixture(scope="session")
def exponential():
    return GenGammaParams.exponential()


@pytest.fixture(scope="session")
def hn_grid(half_normal):
    return de.discretize(half_normal)


@pytest.fixture(scope="session")
def hn_grid_coarse(half_normal):
    return de.discretize(half_normal, m=2 ** 14)


@pytest.fixture(scope="session")
def hn_sum3(hn_grid):
    return de.sum_distribution(hn_grid, 3)


@pytest.fixture(scope="session")
def hn_max3(hn_grid):
    return de.max_distribution(hn_grid, 3)


SQRT2 = math.sqrt(2.0)


# Filled by tests/test_acceptance.py: criterion number -> (passed, detail).
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
