import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def interior_states(arity, count, seed, floor=0.02):
    """Deterministic interior simplex points."""
    gen = np.random.default_rng(seed)
    raw = gen.dirichlet(np.ones(arity), size=count)
    return [(1.0 - floor * arity) * row + floor for row in raw]
