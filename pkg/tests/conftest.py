import numpy as np
import pytest

from nls_conserve.spectral import Grid


def free_gaussian(grid: Grid, t: float, width: float = 1.0) -> np.ndarray:
    """Closed-form free evolution of exp(-|x|^2/(2 w^2)) under i u_t + 1/2 Lap u = 0."""
    z = width ** 2 + 1j * t
    return (width ** 2 / z) ** (grid.dim / 2) * np.exp(-grid.r2 / (2 * z))


@pytest.fixture
def grid1():
    return Grid.uniform(1, 512, 60.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
