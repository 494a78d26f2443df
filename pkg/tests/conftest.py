import warnings

import pytest
from hypothesis import HealthCheck, settings

from purcell_pcb.synthesis import calibrate_filter, default_cell

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def calibration():
    return calibrate_filter(9.8e9, 0.9e9)


@pytest.fixture(scope="session")
def cell11():
    """Calibrated cell with one resonator at 9.8 GHz and one qubit at 4.43 GHz."""
    return default_cell(1, 1)


@pytest.fixture(scope="session")
def cell91():
    """Calibrated 9-1 cell with one qubit on resonator 1."""
    return default_cell(9, 1)


@pytest.fixture
def no_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        yield
