import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from normsol import ProblemParams, SolveConfig, make_grid, solve_wp, solve_wpq


@pytest.fixture(scope="session")
def townes():
    """Semilinear extremal at (N=2, p=4), the 2-D critical profile."""
    return solve_wp(2, 4.0, make_grid(2, 25.0, 2500), q=1.5)


@pytest.fixture(scope="session")
def wp_33():
    """Semilinear extremal at (N=3, p=3) with gradq reported at q=2.5."""
    return solve_wp(3, 3.0, make_grid(3, 30.0, 3000), q=2.5)


@pytest.fixture(scope="session")
def wp_35():
    """Semilinear extremal at (N=3, p=5) (supercritical benchmark constant)."""
    return solve_wp(3, 5.0, make_grid(3, 40.0, 4000), q=2.5)


@pytest.fixture(scope="session")
def wpq_benchmark():
    """q-Laplacian extremal at (N=3, p=5, q=2.5)."""
    return solve_wpq(3, 5.0, 2.5, make_grid(3, 30.0, 3000))


@pytest.fixture(scope="session")
def subcritical_params():
    return ProblemParams(3, 2.5, 3.0, 1.0)


@pytest.fixture(scope="session")
def supercritical_params():
    return ProblemParams(3, 2.5, 5.0, 1.0)
