import numpy as np
import pytest

import qdim as Q

LOG23 = np.log(2.0) / np.log(3.0)


@pytest.fixture(scope="session")
def e1():
    return Q.cantor_system(), Q.log_weight_family([0.5, 0.5])


@pytest.fixture(scope="session")
def e2():
    return Q.similarity_system([1 / 3, 1 / 3], [0.0, 2 / 3]), Q.log_weight_family([0.7, 0.3])


@pytest.fixture(scope="session")
def e3():
    return Q.geometric_similarity_system(1 / 3), Q.geometric_weight_family(0.5)


@pytest.fixture(scope="session")
def gauss12():
    return Q.gauss_system((1, 2)), Q.derivative_family(0.6)


@pytest.fixture(scope="session")
def gauss_full():
    return Q.gauss_system(None), Q.derivative_family(0.6)


@pytest.fixture(scope="session")
def e1_sample_big(e1):
    system, family = e1
    return Q.sample_measure(system, family, 200_000, seed=11)
