import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rearrangelab.grid import Grid, GridFunction

settings.register_profile("lab", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")


def random_function(grid: Grid, rng: np.random.Generator, radius: float = 0.8, levels: int | None = None):
    """Random nonnegative values on a centred disk, zero elsewhere."""
    v = rng.random(grid.shape)
    if levels:
        v = np.ceil(v * levels) / levels
    r = np.linalg.norm(grid.centers(), axis=-1)
    return GridFunction(grid, np.where(r <= radius * grid.extent, v, 0.0))


@pytest.fixture
def g64():
    return Grid(2, 2.0 / 32, 32)  # 65 x 65 cells over [-2, 2]^2


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion number -> "PASS ..." / "FAIL ..." line, filled by test_acceptance
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
