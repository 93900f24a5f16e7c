"""Tests for pattern fitting and variance extraction."""
import math

import numpy as np
import pytest

from PyEprLab.Const import *
from PyEprLab.Dataset import CoincidenceScan, CountBudget, scan_positions, synthesize
from PyEprLab.Error import FitError
from PyEprLab.Fit import (FLAG_FLAT, FitResult, detector_resolution, extract_variances,
                          fit_pattern, pulls)
from PyEprLab.Optics import DoubleSlitEffective, Open, OpticsConfig, RectSlit
from PyEprLab.Pattern import (PatternCurve, ideal_ghost_image, ideal_ghost_interference,
                              make_grid, predicted_image, predicted_interference)


@pytest.fixture(scope='module')
def ideal_image():
    return ideal_ghost_image(DoubleSlitEffective(BAR_WIDTH_MM, MODE_WAIST_MM),
                             make_grid(IMAGE_GRID_HALF_WIDTH_MM))


@pytest.fixture
def image_model(row1_state, double_slit, optics, slit):
    return predicted_image(row1_state, double_slit, optics, slit)


@pytest.fixture
def positions():
    return scan_positions(IMAGE_SCAN_HALF_RANGE_MM, IMAGE_STEP_MM)


def _fit(scan, ideal, detector):
    result = fit_pattern(scan, ideal, detector)
    assert result.converged
    return result


def test_noise_free_image_recovers_blur(image_model, ideal_image, positions, slit, row1_state):
    scan = synthesize(image_model, CountBudget(1.0e6, 0.0), positions, 0, noise=False)
    result = _fit(scan, ideal_image, slit)
    assert result.blur_sigma == pytest.approx(row1_state.sigma_minus, rel=1e-3)
    assert result.center == pytest.approx(0.0, abs=1e-4)
    assert result.amplitude == pytest.approx(1.0e6, rel=1e-3)
    assert result.arm == ARM_IMAGE


def test_noise_free_interference_recovers_blur(row1_state, double_slit, optics, fiber):
    grid = make_grid(INTERFERENCE_GRID_HALF_WIDTH_MM)
    ideal = ideal_ghost_interference(double_slit, WAVELENGTH_NM, F2_MM, grid)
    model = predicted_interference(row1_state, double_slit, optics, fiber, grid)
    positions = scan_positions(INTERFERENCE_SCAN_HALF_RANGE_MM, INTERFERENCE_STEP_MM)
    scan = synthesize(model, CountBudget(1.0e6, 1.0 / SIGNAL_TO_NOISE), positions, 0,
                      noise=False)
    result = _fit(scan, ideal, fiber)
    truth = optics.momentum_to_position(1.0 / row1_state.sigma_plus)
    assert result.blur_sigma == pytest.approx(truth, rel=1e-3)
    assert result.background == pytest.approx(1.0e6 / SIGNAL_TO_NOISE, rel=1e-3)


def test_shifted_scan_moves_only_the_center(image_model, ideal_image, positions, slit):
    scan = synthesize(image_model, CountBudget.from_snr(IMAGE_PEAK_COUNTS), positions, 21)
    base = _fit(scan, ideal_image, slit)
    moved = _fit(scan.shifted(0.3), ideal_image, slit)
    assert moved.center - base.center == pytest.approx(0.3, abs=1e-9)
    assert moved.blur_sigma == pytest.approx(base.blur_sigma, abs=1e-9)
    assert moved.amplitude == pytest.approx(base.amplitude, rel=1e-6)


def test_realistic_budget_recovers_variance(image_model, ideal_image, positions, slit,
                                            row1_state):
    budget = CountBudget.from_snr(IMAGE_PEAK_COUNTS)
    blurs = [_fit(synthesize(image_model, budget, positions, seed), ideal_image, slit).blur_sigma
             for seed in range(10)]
    assert np.median(np.square(blurs)) == pytest.approx(row1_state.sigma_minus ** 2, rel=0.15)


def test_pulls_have_unit_spread(image_model, ideal_image, positions, slit, row1_state):
    budget = CountBudget.from_snr(IMAGE_PEAK_COUNTS)
    fits = [_fit(synthesize(image_model, budget, positions, 1000 + seed), ideal_image, slit)
            for seed in range(100)]
    values = pulls([fit.blur_sigma for fit in fits], [fit.blur_sigma_err for fit in fits],
                   row1_state.sigma_minus)
    assert 0.7 <= np.std(values, ddof=1) <= 1.3


def test_high_counts_have_small_bias(image_model, ideal_image, positions, slit, row1_state):
    budget = CountBudget.from_snr(1.0e5)
    blurs = [_fit(synthesize(image_model, budget, positions, seed), ideal_image, slit).blur_sigma
             for seed in range(5)]
    assert np.mean(blurs) == pytest.approx(row1_state.sigma_minus, rel=0.02)


def test_flat_scan_is_not_fitted(ideal_image, positions):
    scan = CoincidenceScan(ARM_IMAGE, positions, np.full(positions.size, 7), 1.0, 0)
    result = fit_pattern(scan, ideal_image)
    assert not result.converged
    assert result.flag == FLAG_FLAT
    assert math.isinf(result.blur_sigma_err)
    assert result.state_save()['errors']['blur_sigma'] == 'inf'


def test_short_scan_rejected(ideal_image):
    scan = CoincidenceScan(ARM_IMAGE, [-0.2, -0.1, 0.0, 0.1, 0.2], [5, 3, 1, 3, 5], 1.0, 0)
    with pytest.raises(FitError):
        fit_pattern(scan, ideal_image)


def test_ideal_grid_must_cover_scan(double_slit, positions):
    grid = make_grid(1.0)
    ideal = PatternCurve(grid, np.abs(double_slit.transmission(grid)) ** 2, ARM_IMAGE)
    counts = (100 * np.exp(-positions ** 2)).astype(np.int64)
    scan = CoincidenceScan(ARM_IMAGE, positions, counts, 1.0, 0)
    with pytest.raises(FitError):
        fit_pattern(scan, ideal)


def _result(blur, error=0.0, arm=ARM_IMAGE, converged=True):
    errors = dict(amplitude=1.0, background=1.0, center=1e-3, blur_sigma=error)
    return FitResult(100.0, 3.0, 0.0, blur, errors, 1.0, converged, n_points=41, arm=arm)


def test_extraction_inverts_the_blur_formulas(optics, row1_state):
    blur_x = optics.magnification * row1_state.sigma_minus
    blur_p = optics.momentum_to_position(1.0 / row1_state.sigma_plus)
    measurement = extract_variances(_result(blur_x, 0.01),
                                    _result(blur_p, 1e-4, ARM_INTERFERENCE), optics)
    assert measurement.var_x_minus == pytest.approx(TABLE1_ROW1_VAR_X_MINUS, rel=1e-12)
    assert measurement.var_p_plus == pytest.approx(TABLE1_ROW1_VAR_P_PLUS, rel=1e-9)
    assert measurement.err_x == pytest.approx(2.0 * blur_x * 0.01)
    assert not measurement.clamped


def test_longer_fourier_lens_shrinks_momentum_variance():
    blur = 3.6e-3
    short = extract_variances(_result(0.48), _result(blur, arm=ARM_INTERFERENCE),
                              OpticsConfig(f2=32.0))
    long = extract_variances(_result(0.48), _result(blur, arm=ARM_INTERFERENCE),
                             OpticsConfig(f2=64.0))
    assert long.var_p_plus == pytest.approx(short.var_p_plus / 4.0, rel=1e-12)
    assert long.var_x_minus == short.var_x_minus


def test_blur_below_resolution_is_clamped(optics, slit, fiber):
    widths = (detector_resolution(slit), detector_resolution(fiber))
    measurement = extract_variances(_result(0.05), _result(5e-3, arm=ARM_INTERFERENCE),
                                    optics, widths)
    assert measurement.clamped
    assert measurement.var_x_minus == 0.0
    assert measurement.var_p_plus > 0.0


def test_unconverged_fit_not_extracted(optics):
    with pytest.raises(FitError):
        extract_variances(_result(0.48, converged=False),
                          _result(3.6e-3, arm=ARM_INTERFERENCE), optics)


def test_detector_resolution():
    assert detector_resolution(None) == 0.0
    assert detector_resolution(Open()) == 0.0
    assert detector_resolution(RectSlit(0.4)) == pytest.approx(0.4 / math.sqrt(12.0))


def test_fit_result_round_trip():
    result = _result(0.48, 0.01)
    assert FitResult.state_load(result.state_save()) == result


def test_pulls_need_positive_errors():
    with pytest.raises(FitError):
        pulls([1.0], [0.0], 1.0)
