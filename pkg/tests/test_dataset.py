"""Tests for coincidence scan synthesis and phase-space sampling."""
import json
import math

import numpy as np
import pytest
from scipy import stats

from PyEprLab.Const import *
from PyEprLab.Dataset import (CoincidenceScan, CountBudget, derive_seed, mc_ghost_image,
                              scan_positions, synthesize, wigner_sample)
from PyEprLab.Error import DatasetError
from PyEprLab.Optics import DoubleSlitEffective, GaussianPinhole, Open, OpticsConfig, RectSlit
from PyEprLab.Pattern import PatternCurve, make_grid, predicted_image
from PyEprLab.State import DoubleGaussianState


@pytest.fixture
def image_model(row1_state, double_slit, optics, slit):
    return predicted_image(row1_state, double_slit, optics, slit)


@pytest.fixture
def positions():
    return scan_positions(IMAGE_SCAN_HALF_RANGE_MM, IMAGE_STEP_MM)


@pytest.fixture
def budget():
    return CountBudget.from_snr(IMAGE_PEAK_COUNTS)


def test_scan_positions_symmetric(positions):
    assert positions.size == 41
    assert positions[20] == 0.0
    assert positions[0] == pytest.approx(-2.0)


def test_derived_seeds_are_stable_and_distinct():
    assert derive_seed(7, 1, 2) == derive_seed(7, 1, 2)
    assert derive_seed(7, 1, 2) != derive_seed(7, 2, 1)
    with pytest.raises(DatasetError):
        derive_seed(-1)
    with pytest.raises(DatasetError):
        derive_seed(1.5)


def test_budget_floor_and_attenuation(budget):
    assert budget.background == pytest.approx(IMAGE_PEAK_COUNTS / SIGNAL_TO_NOISE)
    stored = budget.attenuated(STORAGE_EFFICIENCY, IMAGE_DURATION_S_STORED / IMAGE_DURATION_S)
    assert stored.peak_expected == pytest.approx(189.0)
    assert stored.background_fraction == budget.background_fraction
    with pytest.raises(DatasetError):
        CountBudget(0.0)
    with pytest.raises(DatasetError):
        CountBudget(10.0, 1.0)
    with pytest.raises(DatasetError):
        CountBudget.from_snr(10.0, 0.5)


def test_synthesis_is_deterministic(image_model, budget, positions):
    first = synthesize(image_model, budget, positions, 11)
    second = synthesize(image_model, budget, positions, 11)
    other = synthesize(image_model, budget, positions, 12)
    np.testing.assert_array_equal(first.counts, second.counts)
    assert not np.array_equal(first.counts, other.counts)
    assert first == second


def test_zero_curve_without_floor_gives_zero_counts(positions):
    grid = make_grid(4.0)
    curve = PatternCurve(grid, np.zeros(grid.size), ARM_IMAGE)
    scan = synthesize(curve, CountBudget(100.0, 0.0), positions, 3)
    assert np.all(scan.counts == 0)


def test_counts_average_to_expectation(image_model, budget, positions):
    expected = budget.background + budget.peak_expected * image_model.value_at(positions)
    draws = np.array([synthesize(image_model, budget, positions, seed).counts
                      for seed in range(100)])
    standard_error = np.sqrt(expected / 100.0)
    assert np.all(np.abs(draws.mean(axis=0) - expected) <= 4.0 * standard_error)


def test_counts_are_poisson_dispersed(image_model, budget, positions):
    draws = np.array([synthesize(image_model, budget, positions, seed).counts[10]
                      for seed in range(200)])
    assert draws.var(ddof=1) / draws.mean() == pytest.approx(1.0, abs=0.4)


def test_noise_free_counts_are_rounded_expectations(image_model, budget, positions):
    scan = synthesize(image_model, budget, positions, 5, noise=False)
    expected = budget.background + budget.peak_expected * image_model.value_at(positions)
    np.testing.assert_array_equal(scan.counts, np.rint(expected).astype(np.int64))
    assert scan.meta['noise'] is False
    assert scan.meta['background_model'] == 'flat'


def test_curve_must_cover_scan(image_model, budget):
    with pytest.raises(DatasetError):
        synthesize(image_model, budget, np.array([-9.0, 0.0, 9.0]), 1)


def test_scan_validation():
    with pytest.raises(DatasetError):
        CoincidenceScan(ARM_IMAGE, [0.0, 1.0], [1, -1], 1.0, 0)
    with pytest.raises(DatasetError):
        CoincidenceScan(ARM_IMAGE, [0.0, 1.0], [1.5, 2.0], 1.0, 0)
    with pytest.raises(DatasetError):
        CoincidenceScan(ARM_IMAGE, [1.0, 0.0], [1, 2], 1.0, 0)
    with pytest.raises(DatasetError):
        CoincidenceScan(ARM_IMAGE, [0.0, 1.0], [1, 2], 0.0, 0)
    with pytest.raises(DatasetError):
        CoincidenceScan(5, [0.0, 1.0], [1, 2], 1.0, 0)


def test_scan_files(tmp_path, image_model, budget, positions):
    scan = synthesize(image_model, budget, positions, 9, duration_s=IMAGE_DURATION_S,
                      meta={'row': 1})
    path = str(tmp_path / 'image.csv')
    scan.write(path)
    with open(path) as handle:
        assert handle.readline() == 'position_mm,counts,duration_s\n'
    with open(str(tmp_path / 'image.json')) as handle:
        sidecar = json.load(handle)
    assert sidecar['arm'] == 'image'
    assert sidecar['seed'] == 9
    assert sidecar['meta']['row'] == 1
    assert CoincidenceScan.read(path) == scan


def test_scan_without_sidecar_needs_arm(tmp_path):
    path = tmp_path / 'external.csv'
    path.write_text('position_mm,counts,duration_s\n0.0,3,1.0\n0.1,4,1.0\n')
    with pytest.raises(DatasetError):
        CoincidenceScan.read(str(path))
    scan = CoincidenceScan.read(str(path), ARM_INTERFERENCE)
    assert scan.arm == ARM_INTERFERENCE
    assert scan.counts.tolist() == [3, 4]


def test_scan_with_mixed_durations_rejected(tmp_path):
    path = tmp_path / 'mixed.csv'
    path.write_text('position_mm,counts,duration_s\n0.0,3,1.0\n0.1,4,2.0\n')
    with pytest.raises(DatasetError):
        CoincidenceScan.read(str(path), ARM_IMAGE)


def test_wigner_sample_covariances(row1_state):
    n = 1000000
    sample = wigner_sample(row1_state, n, 17)
    assert sample.shape == (n, 4)
    x1, p1, x2, p2 = sample.T
    for values, variance in ((x1 - x2, row1_state.sigma_minus ** 2),
                             (p1 + p2, 1.0 / row1_state.sigma_plus ** 2),
                             (x1 + x2, row1_state.sigma_plus ** 2),
                             (p1 - p2, 1.0 / row1_state.sigma_minus ** 2)):
        assert abs(values.var() - variance) <= 4.0 * variance * math.sqrt(2.0 / n)
    np.testing.assert_array_equal(sample, wigner_sample(row1_state, n, 17))


def test_wigner_sample_rejects_bad_requests(row1_state):
    with pytest.raises(DatasetError):
        wigner_sample(row1_state, 0, 1)
    with pytest.raises(DatasetError):
        wigner_sample(DoubleGaussianState(0.5, 1.0, dimension=2), 10, 1)


def test_mc_blocking_aperture_gives_no_counts(row1_state, slit, positions):
    scan = mc_ghost_image(row1_state, DoubleSlitEffective(1000.0, 1.1), slit, positions,
                          100000, 4)
    assert np.all(scan.counts == 0)


def test_mc_open_aperture_has_no_dip(slit):
    state = DoubleGaussianState(0.48, 2.0)
    scan = mc_ghost_image(state, Open(), slit, np.array([-0.6, 0.0, 0.6]), 1000000, 8)
    assert scan.counts[1] > scan.counts[0]
    assert scan.counts[1] > scan.counts[2]


def test_mc_needs_hard_edged_detector(row1_state, double_slit, positions):
    with pytest.raises(DatasetError):
        mc_ghost_image(row1_state, double_slit, GaussianPinhole(0.01), positions, 10, 1)


def test_mc_agrees_with_blurred_image(double_slit, slit):
    state = DoubleGaussianState(math.sqrt(TABLE1_ROW1_VAR_X_MINUS), 50.0)
    positions = scan_positions(2.0, 0.4)
    scan = mc_ghost_image(state, double_slit, slit, positions, 1000000, 2019)
    model = predicted_image(state, double_slit, OpticsConfig(), slit).value_at(positions)
    expected = scan.counts.sum() * model / model.sum()
    chi2 = float(np.sum((scan.counts - expected) ** 2 / expected))
    dof = positions.size - 1
    assert dof == 10
    assert 0.01 <= stats.chi2.sf(chi2, dof) <= 0.99
