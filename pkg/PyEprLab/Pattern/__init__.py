"""PyEprLab Pattern.

Coincidence pattern predictions: ideal ghost image and ghost
interference curves, Gaussian-blurred fit models, and amplitude-integral
oracles evaluated straight from the wavefunction.
"""
import csv
import logging
import math

import numpy as np
from scipy import fft as sp_fft
from scipy import signal
from scipy import special

from ..Const import *
from ..Error import PatternError, StateError
from ..Node import Node
from ..Optics import (DoubleSlitEffective, GaussianPinhole, Open, RectSlit,
                      focal_plane_momentum, focal_plane_position, spectrum)

_LOGGER = logging.getLogger(__name__)


def make_grid(half_width, n_points=GRID_POINTS):
    """Uniform grid over [-half_width, half_width].

    An odd n_points keeps x = 0 on the grid.
    """
    if not (half_width > 0.0) or not math.isfinite(half_width):
        raise PatternError('grid half width must be positive, got {!r}'.format(half_width))
    if int(n_points) < 16:
        raise PatternError('grid needs at least 16 points, got {!r}'.format(n_points))
    return np.linspace(-half_width, half_width, int(n_points))


class PatternCurve(Node):
    """Represents a coincidence pattern sampled on a uniform grid."""

    SPACING_TOLERANCE = 1.0e-6

    def __init__(self, positions, values, kind, normalization=NORMALIZATION_MAX,
                 converged=True, description=None):
        """Initializes PatternCurve object.

        positions: Strictly increasing, uniformly spaced positions in mm.
        values: Non-negative values, one per position.
        kind: ARM_IMAGE or ARM_INTERFERENCE.
        normalization: 'max', 'area' or 'none' (default 'max').
        converged: False if an oracle quadrature did not converge (default True).
        description: Free text label (default None).
        """
        # Let Node initialize common things
        super().__init__('PatternCurve', description)
        positions = np.array(positions, dtype=np.float64)
        values = np.array(values, dtype=np.float64)
        if positions.ndim != 1 or positions.size < 2 or values.shape != positions.shape:
            raise PatternError('positions and values must be matching 1-D sequences')
        if not (np.all(np.isfinite(positions)) and np.all(np.isfinite(values))):
            raise PatternError('pattern contains non-finite entries')
        steps = np.diff(positions)
        if np.any(steps <= 0.0):
            raise PatternError('positions must be strictly increasing')
        if np.max(np.abs(steps - steps.mean())) > self.SPACING_TOLERANCE * steps.mean():
            raise PatternError('positions must be uniformly spaced')
        if np.any(values < 0.0):
            raise PatternError('pattern values must be non-negative')
        if kind not in ARM_STR:
            raise PatternError('unknown pattern kind {!r}'.format(kind))
        if normalization not in (NORMALIZATION_MAX, NORMALIZATION_AREA, NORMALIZATION_NONE):
            raise PatternError('unknown normalization {!r}'.format(normalization))
        positions.flags.writeable = False
        values.flags.writeable = False
        self._positions = positions
        self._values = values
        self._kind = kind
        self._normalization = normalization
        self._converged = bool(converged)

    @property
    def positions(self):
        """Returns the grid positions (mm), read only."""
        return self._positions

    @property
    def values(self):
        """Returns the pattern values, read only."""
        return self._values

    @property
    def kind(self):
        return self._kind

    @property
    def kind_str(self):
        return ARM_STR[self._kind]

    @property
    def normalization(self):
        return self._normalization

    @property
    def converged(self):
        return self._converged

    @property
    def spacing(self):
        """Returns the grid spacing (mm)."""
        return (self._positions[-1] - self._positions[0]) / (self._positions.size - 1)

    @property
    def span(self):
        """Returns the width of the grid window (mm)."""
        return self._positions[-1] - self._positions[0]

    def area(self):
        """Riemann sum of the values over the grid."""
        return float(np.sum(self._values) * self.spacing)

    def value_at(self, x):
        """Linear interpolation of the curve at x (mm), inside the grid only."""
        x = np.asarray(x, dtype=np.float64)
        if np.any(x < self._positions[0]) or np.any(x > self._positions[-1]):
            raise PatternError('position outside the pattern grid [{:g}, {:g}]'
                               .format(self._positions[0], self._positions[-1]))
        return np.interp(x, self._positions, self._values)

    def normalized(self, normalization=NORMALIZATION_MAX):
        """Copy of this curve under a different normalization."""
        if normalization == NORMALIZATION_MAX:
            scale = self._values.max()
        elif normalization == NORMALIZATION_AREA:
            scale = self.area()
        else:
            scale = 1.0
        if scale <= 0.0:
            raise PatternError('cannot normalize an all-zero pattern')
        return PatternCurve(self._positions, self._values / scale, self._kind,
                            normalization, self._converged, self._description)

    def with_values(self, values, normalization=None):
        """Same grid and kind with new values."""
        return PatternCurve(self._positions, values, self._kind,
                            normalization or self._normalization,
                            self._converged, self._description)

    def to_csv(self, path):
        """Write the curve as position_mm,value CSV."""
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow(['position_mm', 'value'])
            for position, value in zip(self._positions, self._values):
                writer.writerow([repr(float(position)), repr(float(value))])
        _LOGGER.debug('wrote {} points to {}'.format(self._positions.size, path))

    @classmethod
    def read_csv(cls, path, kind, normalization=NORMALIZATION_MAX):
        """Read a curve written by to_csv."""
        positions = []
        values = []
        with open(path, newline='') as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames != ['position_mm', 'value']:
                raise PatternError('{}: expected columns position_mm,value'.format(path))
            for row in reader:
                try:
                    positions.append(float(row['position_mm']))
                    values.append(float(row['value']))
                except (TypeError, ValueError):
                    raise PatternError('{}: malformed row {!r}'.format(path, row))
        return cls(positions, values, kind, normalization)

    def state_save(self):
        state = super().state_save()
        state['kind'] = self.kind_str
        state['normalization'] = self._normalization
        state['converged'] = self._converged
        state['positions_mm'] = self._positions.tolist()
        state['values'] = self._values.tolist()
        return state

    @classmethod
    def state_load(cls, state):
        return cls(state['positions_mm'], state['values'], ARM_FROM_STR[state['kind']],
                   state.get('normalization', NORMALIZATION_MAX),
                   state.get('converged', True), state.get('description'))


def _max_normalized(values):
    values = np.clip(values, 0.0, None)
    peak = values.max()
    if peak <= 0.0:
        raise PatternError('pattern vanishes on the whole grid')
    return values / peak


def gaussian_blur(values, spacing, sigma):
    """Convolve sampled values with a unit-area Gaussian of width sigma.

    Done as a multiplication by exp(-k^2 sigma^2 / 2) on a zero-padded
    real FFT, so the total sum is preserved and sigma = 0 is the identity.
    """
    values = np.asarray(values, dtype=np.float64)
    if sigma == 0.0:
        return values.copy()
    size = values.size
    padded = sp_fft.next_fast_len(2 * size, real=True)
    k = TWO_PI * np.fft.rfftfreq(padded, d=spacing)
    transform = np.fft.rfft(values, padded) * np.exp(-0.5 * (sigma * k) ** 2)
    return np.fft.irfft(transform, padded)[:size]


def detector_kernel(detector, spacing):
    """Unit-sum detector acceptance kernel sampled on a grid spacing.

    Returns None for an Open detector. RectSlit weights are the exact
    overlap of each grid cell with the slit.
    """
    if detector is None or isinstance(detector, Open):
        return None
    if isinstance(detector, RectSlit):
        half = detector.width / 2.0
        reach = int(math.ceil(half / spacing + 0.5))
        offsets = np.arange(-reach, reach + 1) * spacing
        lo = np.maximum(offsets - spacing / 2.0, -half)
        hi = np.minimum(offsets + spacing / 2.0, half)
        weights = np.clip(hi - lo, 0.0, None)
    else:
        window = detector.natural_window()
        reach = int(math.ceil(window / spacing))
        offsets = np.arange(-reach, reach + 1) * spacing
        weights = np.abs(detector.transmission(offsets)) ** 2
    total = weights.sum()
    if total <= 0.0:
        # Acceptance narrower than one grid cell
        weights = np.zeros(1)
        weights[0] = 1.0
        total = 1.0
    return weights / total


def apply_detector(values, spacing, detector):
    """Convolve sampled values with a detector acceptance."""
    kernel = detector_kernel(detector, spacing)
    if kernel is None or kernel.size == 1:
        return np.asarray(values, dtype=np.float64)
    if kernel.size >= len(values):
        raise PatternError('detector {} wider than the grid window'
                           .format(detector.description_pretty('detector')))
    return signal.fftconvolve(values, kernel, mode='same')


def ideal_ghost_image(aperture, grid):
    """|transmission|^2 on the grid, normalized to max 1."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size < 2:
        raise PatternError('grid needs at least two points')
    spacing = (grid[-1] - grid[0]) / (grid.size - 1)
    if isinstance(aperture, DoubleSlitEffective):
        across = aperture.bar_width / spacing
        if across < MIN_POINTS_ACROSS_BAR:
            raise PatternError('grid too coarse: {:.1f} points across the bar, need {}'
                               .format(across, MIN_POINTS_ACROSS_BAR))
    values = np.abs(aperture.transmission(grid)) ** 2
    if not isinstance(aperture, Open) and max(values[0], values[-1]) > 1.0e-6 * values.max():
        raise PatternError('grid [{:g}, {:g}] does not span the aperture support'
                           .format(grid[0], grid[-1]))
    return PatternCurve(grid, _max_normalized(values), ARM_IMAGE,
                        description='ideal ghost image')


def ideal_ghost_interference(aperture, lambda_nm, f2, grid, window=None,
                             n_nodes=QUADRATURE_NODES):
    """|Fourier transform of the aperture|^2 at k = 2 pi x / (lambda f2).

    window: Transform half-width, at least the aperture's natural window
    (6 mode waists for the effective double slit).
    """
    grid = np.asarray(grid, dtype=np.float64)
    k = focal_plane_momentum(grid, lambda_nm, f2)
    values = np.abs(spectrum(aperture, k, window=window, n_nodes=n_nodes)) ** 2
    return PatternCurve(grid, _max_normalized(values), ARM_INTERFERENCE,
                        description='ideal ghost interference')


def _blur_sigma(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise PatternError('{} must be a number, got {!r}'.format(name, value))
    if not math.isfinite(value) or value < 0.0:
        raise PatternError('{} must be non-negative, got {!r}'.format(name, value))
    return value


def blurred_pattern(ideal, blur_sigma, detector=None, normalize=True):
    """Ideal curve convolved with a Gaussian and a detector acceptance.

    ideal: PatternCurve to blur.
    blur_sigma: Gaussian standard deviation in mm.
    detector: Aperture whose |transmission|^2 is the acceptance (default Open).
    normalize: Renormalize to max 1, otherwise keep the area (default True).
    """
    blur_sigma = _blur_sigma(blur_sigma, 'blur_sigma')
    if 6.0 * blur_sigma > ideal.span:
        raise PatternError('blur {:g} mm too wide for a {:g} mm grid window'
                           .format(blur_sigma, ideal.span))
    values = gaussian_blur(ideal.values, ideal.spacing, blur_sigma)
    values = apply_detector(values, ideal.spacing, detector)
    values = np.clip(values, 0.0, None)
    if normalize:
        return ideal.with_values(_max_normalized(values), NORMALIZATION_MAX)
    return ideal.with_values(values, NORMALIZATION_NONE)


def predicted_image(state, aperture, optics, detector, grid=None):
    """Ghost image of a state: ideal image blurred by M sqrt(var_x_minus)."""
    if grid is None:
        grid = make_grid(IMAGE_GRID_HALF_WIDTH_MM)
    blur = abs(optics.magnification) * state.sigma_minus
    _LOGGER.debug('predicted_image: blur {:.6g} mm'.format(blur))
    ideal = ideal_ghost_image(aperture, grid)
    return blurred_pattern(ideal, blur, detector)


def predicted_interference(state, aperture, optics, detector, grid=None):
    """Ghost interference of a state: ideal fringes blurred by the momentum spread."""
    if grid is None:
        grid = make_grid(INTERFERENCE_GRID_HALF_WIDTH_MM)
    blur = float(focal_plane_position(1.0 / state.sigma_plus, optics.lambda_nm, optics.f2))
    _LOGGER.debug('predicted_interference: blur {:.6g} mm'.format(blur))
    ideal = ideal_ghost_interference(aperture, optics.lambda_nm, optics.f2, grid)
    return blurred_pattern(ideal, blur, detector)


def _require_line_state(state):
    if state.dimension != 1:
        raise StateError('amplitude oracles need a one-dimensional state')


def _interval_mass(lo, hi, mean, scale):
    """P(lo < Z < hi) for Z ~ N(mean, 1/scale^2), stable in both tails."""
    z_lo = scale * (lo - mean)
    z_hi = scale * (hi - mean)
    upper = special.ndtr(-z_lo) - special.ndtr(-z_hi)
    lower = special.ndtr(z_hi) - special.ndtr(z_lo)
    return np.where(z_lo > 0.0, upper, lower)


def amplitude_image_oracle(state, aperture, x1_grid, detector=None, magnification=1.0):
    """Ghost image from the single-mode projection of the second party.

    C(x1) = |integral phi(x1, x2) T(x2) dx2|^2, then the detector
    acceptance. For a double-Gaussian state and an aperture made of a
    Gaussian times intervals the inner integral is a sum of normal CDF
    differences, so no quadrature is involved.

    x1_grid: Scan positions in the detector plane (mm).
    detector: Scan detector acceptance (default Open).
    magnification: Object to scan plane magnification (default 1).
    """
    _require_line_state(state)
    grid = np.asarray(x1_grid, dtype=np.float64)
    x1 = grid / magnification
    a = state.sigma_minus ** 2
    b = state.sigma_plus ** 2
    gamma = 1.0 / (4.0 * a) + 1.0 / (4.0 * b)
    delta = 1.0 / (2.0 * a) - 1.0 / (2.0 * b)
    g = aperture.gaussian_coefficient
    alpha = gamma + g
    # gamma - delta^2 / (4 alpha) without cancellation
    curvature = (1.0 / (a * b) + 4.0 * g * gamma) / (4.0 * alpha)
    mean = delta * x1 / (2.0 * alpha)
    scale = math.sqrt(2.0 * alpha)
    mass = np.zeros_like(x1)
    for lo, hi in aperture.segments():
        mass += _interval_mass(lo, hi, mean, scale)
    amplitude = np.exp(-curvature * x1 * x1) * mass
    values = np.abs(amplitude) ** 2
    spacing = (grid[-1] - grid[0]) / (grid.size - 1)
    values = apply_detector(values, spacing, detector)
    return PatternCurve(grid, _max_normalized(values), ARM_IMAGE,
                        description='amplitude image oracle')


def amplitude_interference_oracle(state, aperture, optics, x_grid, detector=None,
                                  n_nodes=QUADRATURE_NODES, window=None):
    """Ghost interference from the single-mode projection of the second party.

    A(p) = integral exp(-i p x1) phi(x1, x2) T(x2) dx1 dx2 with the x1
    transform done analytically, leaving a Gaussian-windowed transform of
    the aperture at a contracted frequency. C(X) = |A(2 pi X / (lambda f2))|^2
    then the detector acceptance. The quadrature is repeated with twice the
    nodes and the curve is flagged unconverged if the two differ by more
    than the quadrature tolerance.
    """
    _require_line_state(state)
    grid = np.asarray(x_grid, dtype=np.float64)
    a = state.sigma_minus ** 2
    b = state.sigma_plus ** 2
    envelope = 1.0 / (a + b)
    contraction = (b - a) / (b + a)
    p = focal_plane_momentum(grid, optics.lambda_nm, optics.f2)
    coarse = spectrum(aperture, p, envelope, contraction, n_nodes, window)
    fine = spectrum(aperture, p, envelope, contraction, 2 * n_nodes, window)
    change = np.max(np.abs(fine - coarse)) / max(np.max(np.abs(fine)), 1.0e-300)
    converged = change <= QUADRATURE_TOLERANCE
    if not converged:
        _LOGGER.warning('interference oracle quadrature changed by {:.3g} on doubling'
                        .format(change))
    amplitude = np.exp(-p * p * a * b / (a + b)) * fine
    values = np.abs(amplitude) ** 2
    spacing = (grid[-1] - grid[0]) / (grid.size - 1)
    values = apply_detector(values, spacing, detector)
    return PatternCurve(grid, _max_normalized(values), ARM_INTERFERENCE,
                        converged=converged, description='amplitude interference oracle')


def cross_validate(model, oracle):
    """Sup-norm gap between two max-normalized curves on the model grid."""
    model = model.normalized(NORMALIZATION_MAX)
    oracle = oracle.normalized(NORMALIZATION_MAX)
    inside = (model.positions >= oracle.positions[0]) & (model.positions <= oracle.positions[-1])
    if not np.any(inside):
        raise PatternError('model and oracle grids do not overlap')
    positions = model.positions[inside]
    return float(np.max(np.abs(model.values[inside] - oracle.value_at(positions))))


def first_minimum(curve):
    """Position of the first local minimum at x > 0."""
    values = curve.values
    positions = curve.positions
    for index in range(1, values.size - 1):
        if positions[index] <= 0.0:
            continue
        if values[index] < values[index - 1] and values[index] <= values[index + 1]:
            return float(positions[index])
    raise PatternError('curve has no local minimum at positive positions')


def fringe_visibility(curve, probe=None):
    """(I(0) - I(probe)) / (I(0) + I(probe)).

    probe: Position of the first dark fringe (mm); defaults to the first
    local minimum of the curve itself. Passing the ideal pattern's first
    minimum compares blurred curves at a fixed position.
    """
    if probe is None:
        probe = first_minimum(curve)
    center = float(curve.value_at(0.0))
    dark = float(curve.value_at(probe))
    if center + dark <= 0.0:
        raise PatternError('visibility undefined for a dark center')
    return (center - dark) / (center + dark)


def dip_contrast(curve):
    """1 - I(0) / max(I) of a ghost image."""
    peak = curve.values.max()
    if peak <= 0.0:
        raise PatternError('dip contrast undefined for an all-zero curve')
    return 1.0 - float(curve.value_at(0.0)) / peak


def predict_with_oracle(state, aperture, optics, detector, arm, grid=None):
    """Model curve, oracle curve and their sup-norm gap for one arm."""
    if arm == ARM_IMAGE:
        model = predicted_image(state, aperture, optics, detector, grid)
        oracle = amplitude_image_oracle(state, aperture, model.positions, detector,
                                        optics.magnification)
    elif arm == ARM_INTERFERENCE:
        model = predicted_interference(state, aperture, optics, detector, grid)
        oracle = amplitude_interference_oracle(state, aperture, optics, model.positions,
                                               detector)
    else:
        raise PatternError('unknown arm {!r}'.format(arm))
    gap = cross_validate(model, oracle)
    _LOGGER.info('{} model vs oracle sup-norm gap {:.4f}'.format(ARM_STR[arm], gap))
    return model, oracle, gap
