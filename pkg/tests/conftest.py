import pytest

from PyEprLab.Const import *
from PyEprLab.Optics import DoubleSlitEffective, GaussianPinhole, OpticsConfig, RectSlit
from PyEprLab.State import DoubleGaussianState, StorageChannel


@pytest.fixture
def row1_state():
    """State with the before-storage Table 1 variances."""
    return DoubleGaussianState.from_variances(TABLE1_ROW1_VAR_X_MINUS, TABLE1_ROW1_VAR_P_PLUS)


@pytest.fixture
def storage_channel():
    return StorageChannel(TABLE1_ROW2_VAR_X_MINUS - TABLE1_ROW1_VAR_X_MINUS,
                          TABLE1_ROW2_VAR_P_PLUS - TABLE1_ROW1_VAR_P_PLUS,
                          STORAGE_EFFICIENCY)


@pytest.fixture
def row2_state():
    """State with the after-storage Table 1 variances."""
    return DoubleGaussianState.from_variances(TABLE1_ROW2_VAR_X_MINUS, TABLE1_ROW2_VAR_P_PLUS)


@pytest.fixture
def double_slit():
    return DoubleSlitEffective(BAR_WIDTH_MM, MODE_WAIST_MM)


@pytest.fixture
def slit():
    return RectSlit(SLIT_WIDTH_MM)


@pytest.fixture
def fiber():
    return GaussianPinhole(FIBER_WAIST_MM)


@pytest.fixture
def optics():
    return OpticsConfig()
