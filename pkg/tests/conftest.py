"""Shared fixtures: seeded RNG and the standard odd constants."""
import numpy as np
import pytest
from hypothesis import strategies as st

from src.grassmann import Parity, Supernumber, get_algebra

GENERATORS = 4
SEED = 20240601


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture
def mu():
    return Supernumber.generator(1, GENERATORS)


@pytest.fixture
def nu():
    return Supernumber.generator(2, GENERATORS)


@pytest.fixture
def kappa():
    return Supernumber.generator(3, GENERATORS)


def supernumbers(parity=Parity.MIXED, generators=GENERATORS, scale=2.0):
    """Hypothesis strategy for Supernumbers of a given parity."""
    algebra = get_algebra(generators)
    coeffs = st.lists(st.floats(min_value=-scale, max_value=scale, allow_nan=False),
                      min_size=algebra.dim, max_size=algebra.dim)

    def build(values):
        values = np.asarray(values)
        if parity is Parity.EVEN:
            values = algebra.even_part(values)
        elif parity is Parity.ODD:
            values = algebra.odd_part(values)
        return Supernumber.from_array(values, algebra)

    return coeffs.map(build)
