"""Shared fixtures."""
import pytest

from app.profile1d import solve_1d
from app.radial import RadialProblem, solve_radial


@pytest.fixture(scope="session")
def profile_half_one():
    """Optimal 1D profile for M=0.5, q=1 (central parabola plus sides)."""
    return solve_1d(0.5, 1.0)


@pytest.fixture(scope="session")
def radial_half_one():
    return solve_radial(RadialProblem(R=1.0, M=0.5, q=1.0))


@pytest.fixture(scope="session")
def radial_one_one():
    return solve_radial(RadialProblem(R=1.0, M=1.0, q=1.0))


@pytest.fixture(scope="session")
def radial_classical():
    """q = 0: the classical concave radial minimizer."""
    return solve_radial(RadialProblem(R=1.0, M=1.0, q=0.0))


@pytest.fixture(autouse=True)
def fixed_seed(monkeypatch):
    monkeypatch.delenv("NEWTRES_SEED", raising=False)
