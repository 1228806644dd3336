import numpy as np
import pytest

from ncglab import triples


@pytest.fixture(scope="session")
def circle10():
    return triples.build_circle(10)


@pytest.fixture(scope="session")
def sphere3():
    return triples.build_sphere(3)


@pytest.fixture(scope="session")
def sphere4():
    return triples.build_sphere(4)


@pytest.fixture(scope="session")
def rng():
    return np.random.Generator(np.random.Philox(12345))


def random_hermitian(rng, n, scale=1.0):
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (m + m.conj().T) / 2
