import numpy as np
import pytest


# Multiple of lcm(1..11): every breakpoint j/(K-1) with K <= 12 is a grid node.
DENSE_CELLS = 27_720 * 36


def trapezoid_gram(a, b, points: int = DENSE_CELLS // 9 + 1) -> np.ndarray:
    """Independent Gram oracle: composite trapezoid on a dense uniform grid.

    Each cell uses one-sided limits at its ends so that jumps of zero-degree
    splines sitting on grid nodes do not pick up a half-weighted error.
    """
    n = points - 1
    s = np.arange(points) / n  # correctly rounded, like the knots j / (K - 1)
    h = 1.0 / n
    left, right = s[:-1], s[1:] - 1e-13
    total = a.eval(left).T @ b.eval(left) + a.eval(right).T @ b.eval(right)
    return total * (h / 2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Filled by test_acceptance.py; echoed after the run so the lines survive capture.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
