import math

import numpy as np
import pytest

from querymind.model import GridBelief, Query, ThetaGrid


@pytest.fixture
def default_grid():
    return ThetaGrid(-6.0, 6.0, 241)


@pytest.fixture
def tri_grid():
    """Three uniformly spaced points (0, ln3/2, ln3).

    Against the query (-3, 3) with the absolute-distance reward, the answer-1
    likelihoods at these points are exactly (0.5, 0.75, 0.9) up to float
    rounding, which makes hand-checkable Bayes arithmetic possible.
    """
    return ThetaGrid(0.0, math.log(3.0), 3)


@pytest.fixture
def tri_query():
    return Query(-3.0, 3.0)


@pytest.fixture
def tri_uniform(tri_grid):
    return GridBelief(tri_grid, np.array([1.0, 1.0, 1.0]) / 3.0)
