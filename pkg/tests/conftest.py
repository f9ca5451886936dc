import math

import numpy as np
import pytest


def sin2x(pts):
    return np.sin(2.0 * pts[:, 0])


def sin2x_derivative(alpha, center):
    k = alpha[0]
    return 2.0**k * math.sin(2.0 * center[0] + k * math.pi / 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
