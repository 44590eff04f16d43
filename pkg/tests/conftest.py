import math

import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from nhsta.model import ChartPoint

settings.register_profile("default", deadline=None, max_examples=150)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def off_cut_points(lo=-3.0, hi=3.0, min_abs_y=1e-3):
    """Chart points away from the branch cut, the branch points (0, +-1) and y = 0."""
    coord = st.floats(lo, hi, allow_nan=False, allow_infinity=False)
    return (
        st.tuples(coord, coord)
        .filter(lambda p: abs(p[1]) > min_abs_y)
        .filter(lambda p: abs(p[0]) > 1e-6 or abs(p[1]) > 1.0 + 1e-6)
        .filter(lambda p: math.hypot(p[0], abs(p[1]) - 1.0) > 1e-2)
        .map(lambda p: ChartPoint(*p))
    )


def random_off_cut(rng, n, lo=-3.0, hi=3.0):
    pts = []
    while len(pts) < n:
        x, y = rng.uniform(lo, hi, size=2)
        if abs(y) > 1e-3 and math.hypot(x, abs(y) - 1.0) > 1e-2:
            pts.append((float(x), float(y)))
    return pts


@pytest.fixture
def rng():
    return np.random.default_rng(20241016)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
