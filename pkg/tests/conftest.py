import numpy as np
import pytest

from membrane_rd import ModelParams, build_grid, initial_data, steady_state


@pytest.fixture(scope="session")
def paper_steady():
    """Equilibrium of the reference experiment (total mass 4/5, alpha = 1)."""
    return steady_state(0.8, eps=1.0, alpha=1.0)


@pytest.fixture(scope="session")
def paper_jac(paper_steady):
    return paper_steady.jac


@pytest.fixture
def default_params():
    return ModelParams()


def make_params(**kw):
    return ModelParams(**kw)


def fig3_state(params):
    grid = build_grid(params)
    u0, v0 = initial_data("paper-fig3", grid)
    return grid, u0, v0
