import pytest

from lobeq.distributions import NormalVolume, ParetoSymmetric
from lobeq.equilibrium import EquilibriumBook, MarketParams

BASE_R = 2.0 / 3.0
BASE_TICK = 0.01


@pytest.fixture
def base_law():
    return ParetoSymmetric(3.0, 0.005)


@pytest.fixture
def base_params(base_law):
    return MarketParams(BASE_R, base_law, NormalVolume(1.0))


@pytest.fixture
def base_book(base_params):
    return EquilibriumBook.solve(base_params)
