"""Tests for ideal and blurred ghost patterns and the amplitude oracles."""
import numpy as np
import pytest

from PyEprLab.Const import *
from PyEprLab.Error import PatternError, StateError
from PyEprLab.Optics import Open, OpticsConfig, RectSlit
from PyEprLab.Pattern import (PatternCurve, amplitude_image_oracle,
                              amplitude_interference_oracle, blurred_pattern, cross_validate,
                              dip_contrast, first_minimum, fringe_visibility, gaussian_blur,
                              ideal_ghost_image, ideal_ghost_interference, make_grid,
                              predict_with_oracle, predicted_image, predicted_interference)
from PyEprLab.State import DoubleGaussianState


@pytest.fixture(scope='module')
def image_grid():
    return make_grid(IMAGE_GRID_HALF_WIDTH_MM)


@pytest.fixture(scope='module')
def fringe_grid():
    return make_grid(INTERFERENCE_GRID_HALF_WIDTH_MM)


@pytest.fixture
def ideal_image(double_slit, image_grid):
    return ideal_ghost_image(double_slit, image_grid)


@pytest.fixture
def ideal_fringes(double_slit, fringe_grid):
    return ideal_ghost_interference(double_slit, WAVELENGTH_NM, F2_MM, fringe_grid)


@pytest.fixture
def ideal_limit():
    """Nearly perfect position and momentum correlation."""
    return DoubleGaussianState(0.01, 100.0)


def test_grid_keeps_zero(image_grid):
    assert image_grid.size == GRID_POINTS
    assert image_grid[GRID_POINTS // 2] == 0.0


def test_ideal_image_dark_at_center(ideal_image):
    assert ideal_image.value_at(0.0) == 0.0
    assert ideal_image.values.max() == 1.0
    peak = ideal_image.positions[np.argmax(ideal_image.values)]
    assert abs(abs(peak) - BAR_WIDTH_MM / 2.0) <= ideal_image.spacing


def test_ideal_image_symmetric(ideal_image):
    np.testing.assert_allclose(ideal_image.values, ideal_image.values[::-1], atol=1e-12)


def test_coarse_grid_rejected(double_slit):
    with pytest.raises(PatternError):
        ideal_ghost_image(double_slit, make_grid(IMAGE_GRID_HALF_WIDTH_MM, 101))


def test_grid_must_span_support(double_slit):
    with pytest.raises(PatternError):
        ideal_ghost_image(double_slit, make_grid(2.0))


def test_ideal_fringes_bright_at_center(ideal_fringes):
    assert np.argmax(ideal_fringes.values) == GRID_POINTS // 2
    period = 2.0 * first_minimum(ideal_fringes)
    assert 0.005 <= period <= 0.040


def test_zero_blur_is_identity(ideal_image):
    np.testing.assert_array_equal(gaussian_blur(ideal_image.values, ideal_image.spacing, 0.0),
                                  ideal_image.values)
    blurred = blurred_pattern(ideal_image, 0.0)
    np.testing.assert_allclose(blurred.values, ideal_image.values, atol=1e-15)


def test_blur_preserves_area(ideal_image, slit):
    blurred = blurred_pattern(ideal_image, 0.48, slit, normalize=False)
    assert blurred.normalization == NORMALIZATION_NONE
    assert blurred.area() == pytest.approx(ideal_image.area(), rel=1e-9)


def test_blur_wider_than_window_rejected(ideal_fringes):
    with pytest.raises(PatternError):
        blurred_pattern(ideal_fringes, 0.05)
    with pytest.raises(PatternError):
        blurred_pattern(ideal_fringes, -1e-3)


def test_blur_fills_the_dip(row1_state, row2_state, double_slit, optics, slit):
    row1 = predicted_image(row1_state, double_slit, optics, slit)
    row2 = predicted_image(row2_state, double_slit, optics, slit)
    assert 0.0 < dip_contrast(row1) < 1.0
    assert dip_contrast(row2) < dip_contrast(row1)


def test_momentum_spread_washes_out_fringes(row1_state, row2_state, double_slit, optics,
                                            fiber, ideal_fringes):
    probe = first_minimum(ideal_fringes)
    row1 = predicted_interference(row1_state, double_slit, optics, fiber)
    row2 = predicted_interference(row2_state, double_slit, optics, fiber)
    assert np.argmax(row1.values) == GRID_POINTS // 2
    assert fringe_visibility(row2, probe) < fringe_visibility(row1, probe)
    assert fringe_visibility(row1, probe) < fringe_visibility(ideal_fringes, probe)


def test_ideal_limit_keeps_visibility(ideal_limit, double_slit, optics, ideal_fringes):
    probe = first_minimum(ideal_fringes)
    curve = predicted_interference(ideal_limit, double_slit, optics, Open())
    assert fringe_visibility(curve, probe) == pytest.approx(
        fringe_visibility(ideal_fringes, probe), abs=0.02)


def test_image_oracle_matches_model_in_ideal_limit(ideal_limit, double_slit, optics, image_grid):
    detector = RectSlit(SLIT_WIDTH_MM)
    model = predicted_image(ideal_limit, double_slit, optics, detector, image_grid)
    oracle = amplitude_image_oracle(ideal_limit, double_slit, image_grid, detector)
    assert cross_validate(model, oracle) <= 0.02


def test_interference_oracle_matches_model_in_ideal_limit(ideal_limit, double_slit, optics,
                                                          fringe_grid):
    model = predicted_interference(ideal_limit, double_slit, optics, Open(), fringe_grid)
    oracle = amplitude_interference_oracle(ideal_limit, double_slit, optics, fringe_grid, Open())
    assert oracle.converged
    assert cross_validate(model, oracle) <= 0.02


def test_image_oracle_symmetric(row1_state, double_slit, image_grid, slit):
    oracle = amplitude_image_oracle(row1_state, double_slit, image_grid, slit)
    np.testing.assert_allclose(oracle.values, oracle.values[::-1], atol=1e-9)
    assert oracle.value_at(0.0) < oracle.values.max()


def test_gap_reported_at_table1_widths(row1_state, double_slit, optics, fiber, fringe_grid):
    model, oracle, gap = predict_with_oracle(row1_state, double_slit, optics, fiber,
                                             ARM_INTERFERENCE, fringe_grid)
    assert oracle.converged
    assert 0.0 <= gap <= 1.0
    assert model.kind == oracle.kind == ARM_INTERFERENCE


def test_oracles_need_one_dimension(double_slit, optics, image_grid):
    state = DoubleGaussianState(0.5, 1.0, dimension=2)
    with pytest.raises(StateError):
        amplitude_image_oracle(state, double_slit, image_grid)
    with pytest.raises(StateError):
        amplitude_interference_oracle(state, double_slit, optics, image_grid)


def test_unknown_arm_rejected(row1_state, double_slit, optics, slit):
    with pytest.raises(PatternError):
        predict_with_oracle(row1_state, double_slit, optics, slit, 7)


def test_curve_validation():
    with pytest.raises(PatternError):
        PatternCurve([0.0, 1.0, 3.0], [1.0, 1.0, 1.0], ARM_IMAGE)
    with pytest.raises(PatternError):
        PatternCurve([0.0, 1.0], [1.0, -1.0], ARM_IMAGE)
    with pytest.raises(PatternError):
        PatternCurve([1.0, 0.0], [1.0, 1.0], ARM_IMAGE)
    curve = PatternCurve([0.0, 1.0], [1.0, 0.5], ARM_IMAGE)
    with pytest.raises(PatternError):
        curve.value_at(2.0)
    with pytest.raises(ValueError):
        curve.values[0] = 3.0


def test_curve_csv(tmp_path, ideal_image):
    path = str(tmp_path / 'image.csv')
    ideal_image.to_csv(path)
    with open(path) as handle:
        assert handle.readline() == 'position_mm,value\n'
    loaded = PatternCurve.read_csv(path, ARM_IMAGE)
    np.testing.assert_array_equal(loaded.positions, ideal_image.positions)
    np.testing.assert_array_equal(loaded.values, ideal_image.values)


MOMENTUM_SWEEP = (0.1, 0.3, TABLE1_ROW1_VAR_P_PLUS, TABLE1_ROW2_VAR_P_PLUS, 2.0)
POSITION_SWEEP = (0.05, 0.1, TABLE1_ROW1_VAR_X_MINUS, TABLE1_ROW2_VAR_X_MINUS, 0.5)


def test_oracle_visibility_falls_with_momentum_variance(double_slit, optics, fringe_grid,
                                                        ideal_fringes):
    probe = first_minimum(ideal_fringes)
    visibilities = []
    for var_p in MOMENTUM_SWEEP:
        state = DoubleGaussianState.from_variances(TABLE1_ROW1_VAR_X_MINUS, var_p)
        oracle = amplitude_interference_oracle(state, double_slit, optics, fringe_grid)
        assert oracle.converged
        np.testing.assert_allclose(oracle.values, oracle.values[::-1], atol=1e-12)
        visibilities.append(fringe_visibility(oracle, probe))
    assert np.all(np.diff(visibilities) < 0.0)


def test_model_visibility_falls_with_momentum_variance(double_slit, optics, fiber,
                                                       ideal_fringes):
    probe = first_minimum(ideal_fringes)
    visibilities = [fringe_visibility(predicted_interference(
        DoubleGaussianState.from_variances(TABLE1_ROW1_VAR_X_MINUS, var_p),
        double_slit, optics, fiber), probe) for var_p in MOMENTUM_SWEEP]
    assert np.all(np.diff(visibilities) < 0.0)


def test_dip_contrast_falls_with_position_variance(double_slit, optics, slit):
    contrasts = [dip_contrast(predicted_image(
        DoubleGaussianState.from_variances(var_x, TABLE1_ROW1_VAR_P_PLUS),
        double_slit, optics, slit)) for var_x in POSITION_SWEEP]
    assert np.all(np.diff(contrasts) < 0.0)
    assert 0.0 < contrasts[-1] < contrasts[0] < 1.0


@pytest.mark.parametrize('arm, detector', [
    (ARM_IMAGE, RectSlit(SLIT_WIDTH_MM)),
    (ARM_INTERFERENCE, Open()),
    ])
def test_model_oracle_gap_across_measured_regime(double_slit, optics, arm, detector):
    """At the measured widths the convolution model and the coherent
    integral differ by more than 0.05; the sweep records by how much."""
    gaps = []
    for var_x in (0.15, TABLE1_ROW1_VAR_X_MINUS, TABLE1_ROW2_VAR_X_MINUS):
        for var_p in (0.5, TABLE1_ROW1_VAR_P_PLUS, TABLE1_ROW2_VAR_P_PLUS):
            state = DoubleGaussianState.from_variances(var_x, var_p)
            _, oracle, gap = predict_with_oracle(state, double_slit, optics, detector, arm)
            assert oracle.converged
            gaps.append(gap)
    assert all(0.0 <= gap <= 1.0 for gap in gaps)
    assert max(gaps) > 0.05
