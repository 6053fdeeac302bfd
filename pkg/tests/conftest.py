import numpy as np
import pytest
from hypothesis import strategies as st

from privmech.infocore import Distribution


def simplex(size, floor=0.0):
    """Hypothesis strategy for points of the probability simplex with entries >= floor."""
    raw = st.lists(st.floats(0.05, 1.0), min_size=size, max_size=size)

    def build(xs):
        x = np.array(xs)
        x = floor + (1 - floor * size) * x / x.sum()
        x[-1] = 1.0 - x[:-1].sum()
        return x

    return raw.map(build)


def random_simplex(rng, size, floor=0.0):
    x = rng.dirichlet(np.ones(size))
    x = floor + (1 - floor * size) * x
    x[-1] = 1.0 - x[:-1].sum()
    return x


def random_channel(rng, m, n):
    W = rng.dirichlet(np.ones(n), size=m)
    W[:, -1] = 1.0 - W[:, :-1].sum(axis=1)
    return np.clip(W, 0.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


MIRRORED = (np.array([0.05, 0.95]), np.array([0.95, 0.05]))
