"""Tests for apertures, ray-transfer elements and the focal-plane map."""
import math

import numpy as np
import pytest

from PyEprLab.Const import *
from PyEprLab.Error import ApertureError, QuadratureError
from PyEprLab.Optics import (Aperture, DoubleSlitEffective, FourF, FreeSpace, GaussianPinhole,
                             Open, OpticsConfig, RayTransfer, RectSlit, ThinLens, compose,
                             element, focal_plane_momentum, focal_plane_position, spectrum,
                             transmission)


def test_bar_blocks_center(double_slit):
    assert transmission(double_slit, 0.0) == 0.0
    assert np.all(transmission(double_slit, np.linspace(-0.51, 0.51, 50)) == 0.0)


def test_bar_edge_transmits(double_slit):
    assert transmission(double_slit, 0.52) == pytest.approx(0.7997, abs=1e-4)
    assert transmission(double_slit, 0.52) == pytest.approx(math.exp(-0.52 ** 2 / 1.1 ** 2))


@pytest.mark.parametrize('aperture', [
    DoubleSlitEffective(1.04, 1.1),
    RectSlit(0.4),
    GaussianPinhole(0.0025),
    Open(),
    ])
def test_transmission_even_and_bounded(aperture):
    x = np.linspace(-3.0, 3.0, 601)
    values = transmission(aperture, x)
    np.testing.assert_array_equal(values, transmission(aperture, -x))
    assert np.all(values >= 0.0) and np.all(values <= 1.0)


def test_rect_slit_edges():
    aperture = RectSlit(0.4)
    assert transmission(aperture, 0.2) == 1.0
    assert transmission(aperture, 0.2001) == 0.0


def test_double_slit_is_measurable(double_slit):
    x = np.linspace(-6.6, 6.6, 20001)
    total = np.sum(transmission(double_slit, x) ** 2) * (x[1] - x[0])
    assert 0.0 < total < math.inf


@pytest.mark.parametrize('make', [
    lambda: DoubleSlitEffective(0.0, 1.1),
    lambda: DoubleSlitEffective(1.04, -1.0),
    lambda: RectSlit(float('nan')),
    lambda: GaussianPinhole(0.0),
    ])
def test_invalid_aperture_rejected(make):
    with pytest.raises(ApertureError):
        make()


def test_aperture_state_round_trip(double_slit, slit, fiber):
    for aperture in (double_slit, slit, fiber, Open()):
        assert Aperture.state_load(aperture.state_save()) == aperture


def test_unit_four_f_inverts():
    np.testing.assert_array_equal(element('four_f', 100.0, 100.0).matrix, [[-1.0, 0.0], [0.0, -1.0]])


def test_focal_map_swaps_position_and_angle():
    f = 32.0
    result = compose(FreeSpace(f), ThinLens(f), FreeSpace(f))
    assert result.a == pytest.approx(0.0, abs=1e-12)
    assert result.d == pytest.approx(0.0, abs=1e-12)
    assert result.b == pytest.approx(f)
    assert result.c == pytest.approx(-1.0 / f)


def test_four_f_matches_primitive_elements():
    fa, fb = 500.0, 32.0
    built = compose(FreeSpace(fa), ThinLens(fa), FreeSpace(fa + fb), ThinLens(fb), FreeSpace(fb))
    np.testing.assert_allclose(built.matrix, FourF(fa, fb).matrix, atol=1e-12)


def test_composition_is_associative():
    a, b, c = FreeSpace(10.0), ThinLens(25.0), FreeSpace(7.0)
    left = compose(compose(a, b), c)
    right = compose(a, compose(b, c))
    np.testing.assert_allclose(left.matrix, right.matrix, rtol=1e-12)
    assert left.determinant == pytest.approx(1.0, abs=1e-12)
    assert a.then(b).matrix.tolist() == compose(a, b).matrix.tolist()


def test_determinant_must_be_one():
    with pytest.raises(ApertureError):
        RayTransfer(2.0, 0.0, 0.0, 2.0)


@pytest.mark.parametrize('kind, lengths', [
    ('thin_lens', (0.0,)),
    ('free_space', (-1.0,)),
    ('four_f', (10.0, 0.0)),
    ('four_f', (10.0,)),
    ('mirror', (1.0,)),
    ])
def test_bad_element_rejected(kind, lengths):
    with pytest.raises(ApertureError):
        element(kind, *lengths)


def test_focal_plane_footprint_of_row1_momentum_spread():
    x = focal_plane_position(math.sqrt(0.807), WAVELENGTH_NM, F2_MM)
    assert x == pytest.approx(3.64e-3, rel=2e-3)


def test_focal_plane_map_is_linear_and_invertible():
    assert focal_plane_position(0.0, WAVELENGTH_NM, F2_MM) == 0.0
    p = np.array([-3.0, 0.5, 2.0])
    x = focal_plane_position(p, WAVELENGTH_NM, F2_MM)
    np.testing.assert_allclose(focal_plane_position(2.0 * p, WAVELENGTH_NM, F2_MM), 2.0 * x)
    np.testing.assert_allclose(focal_plane_momentum(x, WAVELENGTH_NM, F2_MM), p, rtol=1e-12)
    unit = focal_plane_momentum(1.0, WAVELENGTH_NM, F2_MM)
    assert unit == pytest.approx(TWO_PI / (WAVELENGTH_NM / NM_PER_MM * F2_MM))


def test_optics_config_defaults(optics):
    assert optics.magnification == 1.0
    assert optics.lambda_mm == pytest.approx(795e-6)
    assert optics.imaging_relay().b == pytest.approx(0.0, abs=1e-9)
    assert optics.fourier_map().b == pytest.approx(F2_MM)


def test_optics_config_rejects_bad_values():
    with pytest.raises(ApertureError):
        OpticsConfig(lambda_nm=0.0)
    with pytest.raises(ApertureError):
        OpticsConfig(f2=-32.0)


def test_rect_slit_spectrum_is_sinc():
    k = np.array([0.0, 0.1, 1.0, 5.0, 10.0])
    result = spectrum(RectSlit(1.0), k)
    expected = np.where(k == 0.0, 1.0, 2.0 * np.sin(k / 2.0) / np.where(k == 0.0, 1.0, k))
    np.testing.assert_allclose(result.real, expected, atol=1e-12)
    np.testing.assert_allclose(result.imag, 0.0, atol=1e-12)


def test_gaussian_spectrum():
    waist = 0.5
    k = np.linspace(-10.0, 10.0, 21)
    expected = math.sqrt(math.pi) * waist * np.exp(-(k * waist) ** 2 / 4.0)
    np.testing.assert_allclose(spectrum(GaussianPinhole(waist), k).real, expected,
                               rtol=1e-10, atol=1e-12)


def test_spectrum_window_must_cover_six_waists(double_slit):
    with pytest.raises(QuadratureError):
        spectrum(double_slit, [0.0, 1.0], window=3.0)
    with pytest.raises(QuadratureError):
        spectrum(Open(), [0.0])
