import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nsac.core import GridSpec, MaterialLaws

settings.register_profile("nsac", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("nsac")


@pytest.fixture
def law():
    return MaterialLaws(0.25, 0.5, 0.25, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def smooth_random(grid: GridSpec, rng, modes: int = 3, amp: float = 1.0):
    """Smooth random field compatible with the grid's boundary mode."""
    x, y = grid.centers()
    f = np.zeros(grid.shape)
    for kx in range(modes + 1):
        for ky in range(modes + 1):
            a = rng.standard_normal() / (1 + kx * kx + ky * ky)
            if grid.periodic:
                ph = rng.uniform(0, 2 * np.pi, 2)
                f += a * np.cos(2 * np.pi * kx * x / grid.lx + ph[0]) * np.cos(2 * np.pi * ky * y / grid.ly + ph[1])
            else:
                f += a * np.cos(np.pi * kx * x / grid.lx) * np.cos(np.pi * ky * y / grid.ly)
    return amp * f / max(np.max(np.abs(f)), 1e-300)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
