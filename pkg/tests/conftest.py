import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spinscope.register import ElectronSpin, make_register

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FL = 5e5  # Hz, working Larmor frequency


@pytest.fixture
def nv():
    return ElectronSpin.nv_like()


@pytest.fixture
def half():
    return ElectronSpin.spin_half()


@pytest.fixture
def one_spin():
    return make_register([(20e3, 10e3)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
