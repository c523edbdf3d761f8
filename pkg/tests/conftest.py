import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=50, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def lorenz():
    from rffrc.systems import integrate_lorenz
    return integrate_lorenz()


@pytest.fixture(scope="session")
def lorenz_model(lorenz):
    from rffrc.forecaster import train
    return train(lorenz.segment(0, 2400), k=5, m=400, sigma_rff=2.0, lambda_reg=1e-6, seed=1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
