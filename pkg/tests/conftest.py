import numpy as np
import pytest
from scipy.integrate import solve_ivp

from geophase.schedule import piecewise_constant
from geophase.su2 import reconstruct


def random_piecewise(rng, n_min=3, n_max=8, bound=5.0, tau=(0.5, 3.0), identity=False):
    """Random piecewise-constant schedule; identity part zero unless requested."""
    n = int(rng.integers(n_min, n_max + 1))
    rows = rng.uniform(-bound, bound, size=(n, 4))
    if not identity:
        rows[:, 0] = 0.0
    weights = rng.uniform(0.2, 1.0, size=n)
    durations = weights / weights.sum() * rng.uniform(*tau)
    return piecewise_constant(rows, durations)


def random_state(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


def rk_propagator(schedule, rtol=1e-12, atol=1e-12):
    """Independent oracle: DOP853 on i dU/dt = H U, segment by segment."""
    u = np.eye(2, dtype=complex)
    for seg in schedule.segments:

        def rhs(t, y, seg=seg):
            h = reconstruct(seg.coeffs(np.array(t)))
            return (-1j * h @ y.reshape(2, 2)).ravel()

        sol = solve_ivp(rhs, (0.0, seg.duration), u.ravel(), method="DOP853", rtol=rtol, atol=atol)
        u = sol.y[:, -1].reshape(2, 2)
    return u


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
