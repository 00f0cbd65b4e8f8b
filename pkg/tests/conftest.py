import numpy as np
import pytest

from nsdpp.constructions import random_kernel


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def valid_kernels(count, n_range, seed, family="mixed"):
    """Deterministic stream of valid kernels with sizes drawn from ``n_range``."""
    gen = np.random.default_rng(seed)
    lo, hi = n_range
    return [random_kernel(int(gen.integers(lo, hi + 1)), gen, family) for _ in range(count)]


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
