import pytest
from hypothesis import settings

from cyclefield.params import ModelParams
from cyclefield.phases import solve_phase

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def params():
    return ModelParams()


@pytest.fixture(scope="session")
def trivial(params):
    return solve_phase(params, 0)


@pytest.fixture(scope="session")
def nontrivial(params):
    return solve_phase(params, 1)
