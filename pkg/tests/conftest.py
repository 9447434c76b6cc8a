import pytest

from bprelab import benchmark_environment, make_environment, make_offspring_law


@pytest.fixture(scope="session")
def m1():
    return benchmark_environment("M1")


@pytest.fixture(scope="session")
def m2():
    return benchmark_environment("M2")


@pytest.fixture(scope="session")
def m3():
    return benchmark_environment("M3")


@pytest.fixture(scope="session")
def doubling_env():
    """Single deterministic two-children state: Z_k = 2^k, W identically 1."""
    return make_environment([make_offspring_law([(2, 1.0)])], [1.0])


@pytest.fixture(scope="session")
def wide_env():
    """Mixture whose positive log-mean deviation exceeds 1 (for the
    alpha-monotonicity of the semi-exponential functional)."""
    law_small = make_offspring_law([(1, 0.9), (2, 0.1)])
    law_big = make_offspring_law([(20, 1.0)])
    return make_environment([law_small, law_big], [0.5, 0.5])
