import functools
import math

import numpy as np
import pytest

from qcurv import build_kernel, make_grid, make_params


@functools.lru_cache(maxsize=None)
def setup(n=2, alpha=0.0, m=2048, r_min=1e-7, r_max=1e4):
    params = make_params(n, alpha)
    grid = make_grid(m, r_min, r_max, alpha, n)
    return params, grid, build_kernel(params, grid)


def singular_bubble(r, alpha):
    """u_alpha(r) = log(2 (1 + alpha) / (1 + r^(2 (1 + alpha))))."""
    a1 = 1.0 + alpha
    return math.log(2.0 * a1) - np.log1p(np.asarray(r) ** (2.0 * a1))


@pytest.fixture(scope="session")
def flat2():
    return setup(2, 0.0)


@pytest.fixture(scope="session")
def half_neg2():
    return setup(2, -0.5)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(RESULTS):
        failed = RESULTS[criterion]
        terminalreporter.write_line(
            f"criterion {criterion:2d}: " + ("PASS" if not failed else "FAIL " + "; ".join(failed)))
