import numpy as np
import pytest

from circlelab.diophantine import certify, GOLDEN_MEAN
from circlelab.maps import Perturbation, PolyInRho
from circlelab.trig import TrigPoly


@pytest.fixture(scope="session")
def golden():
    return certify(GOLDEN_MEAN, q=1.0, K=1024)


@pytest.fixture(scope="session")
def standard_pert():
    # f = sin(theta)(1 + rho/2), g = cos(theta)
    return Perturbation.standard()


@pytest.fixture(scope="session")
def offset_pert():
    # g with nonzero angular mean, so the zero-translation frequency shifts
    # at first order in eps
    return Perturbation(
        PolyInRho([TrigPoly.sine(1), 0.5 * TrigPoly.sine(1)]),
        PolyInRho([TrigPoly.constant(0.5) + TrigPoly.cosine(1)]))


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
