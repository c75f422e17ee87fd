import math
import sys

import numpy as np
import pytest

from besov_ns import make_grid
from besov_ns.lp import build_dyadic_system
from besov_ns.paraproduct import random_field


@pytest.fixture(scope="session")
def grid2():
    return make_grid(2, 64)


@pytest.fixture(scope="session")
def sys2(grid2):
    return build_dyadic_system(grid2)


@pytest.fixture(scope="session")
def grid1():
    return make_grid(1, 128)


@pytest.fixture
def rand_scalar(grid2):
    return random_field(grid2, seed=7)


@pytest.fixture
def rand_vector(grid2):
    return random_field(grid2, seed=11, rank=1)


def rk4_matrix_exponential(M, t, dt=1e-4):
    """Integrate U' = M U from the identity with classical RK4 (independent oracle)."""
    U = np.eye(M.shape[0])
    steps = int(round(t / dt))
    h = t / steps
    for _ in range(steps):
        k1 = M @ U
        k2 = M @ (U + 0.5 * h * k1)
        k3 = M @ (U + 0.5 * h * k2)
        k4 = M @ (U + h * k3)
        U = U + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return U


def system_matrix(r, nu):
    return np.array([[0.0, -r], [r, -nu * r * r]])


TWO_PI = 2 * math.pi


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(mod.RESULTS):
        parts = mod.RESULTS[crit]
        ok = all(p for _, p, _ in parts)
        failed = [name for name, p, _ in parts if not p]
        tail = f" (failed: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'}{tail}")
