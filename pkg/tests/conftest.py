from fractions import Fraction

import numpy as np
import pytest

from lyapsteer.cocycle import Cocycle
from lyapsteer.symbolic import ShiftSystem

DIAG3_LOGS = [[2, -1], [1, -2], [3, -3]]


@pytest.fixture
def abc():
    return ShiftSystem.full_shift("abc")


@pytest.fixture
def diag3():
    return Cocycle.diagonal_exact(DIAG3_LOGS)


@pytest.fixture
def ab():
    return ShiftSystem.full_shift("ab")


@pytest.fixture
def swap():
    return Cocycle([np.diag([2.0, 0.5]), np.array([[0.0, 1.0], [1.0, 0.0]])])


@pytest.fixture
def golden():
    # "bb" forbidden
    return ShiftSystem(["a", "b"], [[1, 1], [1, 0]])


def F(x):
    return Fraction(x)
