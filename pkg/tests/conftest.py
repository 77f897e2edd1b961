import os
from fractions import Fraction

import hypothesis
import numpy as np
import pytest
from hypothesis import strategies as st

hypothesis.settings.register_profile("default", max_examples=40, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ranks = st.integers(min_value=1, max_value=3)
small_floats = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False, allow_infinity=False)
rationals = st.fractions(min_value=-5, max_value=5, max_denominator=12)


def float_vectors(n: int):
    return st.lists(small_floats, min_size=2 * n + 1, max_size=2 * n + 1).map(np.array)


def rational_vectors(n: int):
    return st.lists(rationals, min_size=2 * n + 1, max_size=2 * n + 1).map(lambda v: np.array(v, dtype=object))


def brute_bch(u, v, sign):
    """Order-2 group law written out coordinate by coordinate."""
    n = (len(u) - 1) // 2
    out = [a + b for a, b in zip(u, v)]
    z = sum(u[1 + i] * v[1 + n + i] - u[1 + n + i] * v[1 + i] for i in range(n))
    out[0] = out[0] + sign * Fraction(1, 2) * z if isinstance(z, Fraction) else out[0] + sign * 0.5 * z
    return np.array(out, dtype=object if isinstance(z, Fraction) else float)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
