"""Shared fixtures: the reference parameter set and seeded leaf states."""
import numpy as np
import pytest

from app.dynamics.integrator import integrate
from app.integrals.quadratics import sample_leaf_state
from app.params.algebra import SystemParams

STANDARD_SEED = 7
STANDARD_HORIZON = 10.0
STANDARD_STEP = 1e-3


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def standard_params():
    return SystemParams(j=(1.0, 2.0, 3.0), lam=1.0, lam_prime=1.0)


@pytest.fixture
def leaf_states(rng):
    return [sample_leaf_state(rng) for _ in range(1000)]


@pytest.fixture(scope='session')
def standard_state():
    return sample_leaf_state(np.random.default_rng(STANDARD_SEED))


@pytest.fixture(scope='session')
def standard_trajectory(standard_state):
    params = SystemParams(j=(1.0, 2.0, 3.0), lam=1.0, lam_prime=1.0)
    return integrate(standard_state, params, STANDARD_HORIZON, STANDARD_STEP)
