import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from phiconv import PointCloud, build_family

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# acceptance criteria report one line each at the end of the run
ACCEPTANCE_LINES = {}

SQUARE = [[0, 0], [1, 0], [0, 1], [1, 1], [0.5, 0.5]]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int("".join(c for c in k if c.isdigit())), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def square():
    return PointCloud(SQUARE)


@pytest.fixture
def square_affine(square):
    return build_family("affine", square)


def random_cloud(rng, n, dim=2, lattice=None):
    """Distinct points in the unit cube; on a ``1/lattice`` grid when given."""
    while True:
        if lattice:
            grid = np.array(np.meshgrid(*[np.arange(lattice + 1)] * dim)).reshape(dim, -1).T / lattice
            pick = rng.choice(len(grid), size=min(n, len(grid)), replace=False)
            pts = grid[pick]
        else:
            pts = rng.uniform(0, 1, size=(n, dim))
        # affinely spanning, so every family kind has full rank to start from
        if np.linalg.matrix_rank(np.hstack([np.ones((len(pts), 1)), pts])) == dim + 1:
            return PointCloud(pts)
