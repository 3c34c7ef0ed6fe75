import numpy as np
import pytest

from latticegate import CalibrationModel


@pytest.fixture
def unit_cal():
    """Calibration with slope 1 and no intercept: hold duration == phase."""
    return CalibrationModel(slope=1.0)


@pytest.fixture
def alpha16():
    return np.linspace(0.0, 2.0 * np.pi, 16, endpoint=False)


@pytest.fixture
def alpha32():
    return np.linspace(0.0, 2.0 * np.pi, 32, endpoint=False)
