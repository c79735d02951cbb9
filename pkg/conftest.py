import numpy as np
import pytest

from grenander.data import generate
from grenander.models import CensoredSample, get_scenario
from grenander.smoothing import triweight


@pytest.fixture
def three_rows():
    """Times 1, 2, 3 with the middle one censored."""
    return CensoredSample.from_arrays([1.0, 2.0, 3.0], [True, False, True])


@pytest.fixture
def three_row_csv(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("3,1\n1,1\n2,0\n", encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def weibull():
    return get_scenario("weibull-hazard")


@pytest.fixture(scope="session")
def truncexp():
    return get_scenario("truncexp-density")


@pytest.fixture(scope="session")
def weibull_sample(weibull):
    return generate(weibull.spec.with_n(500).with_seed(11))


@pytest.fixture(scope="session")
def truncexp_sample(truncexp):
    return generate(truncexp.spec.with_n(500).with_seed(11))


@pytest.fixture(scope="session")
def kernel():
    return triweight()


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)
