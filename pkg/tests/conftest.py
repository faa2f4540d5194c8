import numpy as np
import pytest

from horocount.partitions import make_partition


@pytest.fixture
def p2():
    return make_partition(2, [1, 1])


@pytest.fixture
def p3():
    return make_partition(3, [1, 1, 1])


@pytest.fixture
def p21():
    return make_partition(3, [2, 1])


@pytest.fixture
def p12():
    return make_partition(3, [1, 2])


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_sl(rng, n):
    """Random SL_n(R) matrix with moderate condition number."""
    g = rng.normal(size=(n, n))
    g /= abs(np.linalg.det(g)) ** (1.0 / n)
    if np.linalg.det(g) < 0:
        g[:, 0] *= -1.0
    return g
