import itertools

import pytest

from heun_core.config import apply_precision
from heun_core.weights import OperatorParams

GRID = [OperatorParams(p=p, m=m) for p, m in itertools.product(range(4), range(1, 5))]


@pytest.fixture(autouse=True)
def double_precision():
    """Every test runs at the default 53-bit working precision"""
    apply_precision(53)
    yield
    apply_precision(53)


@pytest.fixture
def grid():
    return list(GRID)


@pytest.fixture
def heun_11():
    return OperatorParams(p=1, m=1)


@pytest.fixture
def rng():
    import numpy as np
    return np.random.default_rng(20140101)
