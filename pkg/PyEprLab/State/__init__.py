"""PyEprLab State.

Double-Gaussian EPR state of two parties and the storage channel that
turns the photon - spin wave state into the spin wave - spin wave state.

Units: lengths in mm, momenta as wavenumbers p/hbar in rad/mm, so hbar
drops out of every expression.
"""
import logging
import math

import numpy as np

from ..Const import *
from ..Error import StateError
from ..Node import Node

_LOGGER = logging.getLogger(__name__)


def _finite(value, name):
    """Return value as a float array, rejecting NaN and infinities."""
    array = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(array)):
        raise StateError('{} must be finite, got {!r}'.format(name, value))
    return array


def _positive(value, name):
    """Return value as float, rejecting non-finite or non-positive values."""
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise StateError('{} must be a number, got {!r}'.format(name, value))
    if not math.isfinite(value) or value <= 0.0:
        raise StateError('{} must be positive and finite, got {!r}'.format(name, value))
    return value


class DoubleGaussianState(Node):
    """Represents the two-party double-Gaussian EPR state.

    sigma_minus is the width of the position difference, sigma_plus the
    width of the position sum. Entangled parameterizations have
    sigma_plus > sigma_minus; equality gives a product state.
    """

    DIMENSIONS = (1, 2)

    def __init__(self, sigma_minus, sigma_plus, dimension=1, description=None):
        """Initializes DoubleGaussianState object.

        sigma_minus: Position-difference width in mm.
        sigma_plus: Position-sum width in mm, not smaller than sigma_minus.
        dimension: Number of transverse axes modeled, 1 or 2 (default 1).
        description: Free text label (default None).
        """
        # Let Node initialize common things
        super().__init__('DoubleGaussianState', description)
        self._sigma_minus = _positive(sigma_minus, 'sigma_minus')
        self._sigma_plus = _positive(sigma_plus, 'sigma_plus')
        if dimension not in self.DIMENSIONS:
            raise StateError('dimension must be 1 or 2, got {!r}'.format(dimension))
        self._dimension = dimension
        if self._sigma_plus < self._sigma_minus:
            raise StateError('sigma_plus ({}) must not be smaller than sigma_minus ({})'
                             .format(self._sigma_plus, self._sigma_minus))

    @classmethod
    def from_variances(cls, var_x_minus, var_p_plus, dimension=1, description=None):
        """Build the state whose (x1 - x2) and (p1 + p2) variances are given.

        var_x_minus: Position-difference variance in mm^2.
        var_p_plus: Momentum-sum variance in rad^2/mm^2.
        """
        var_x_minus = _positive(var_x_minus, 'var_x_minus')
        var_p_plus = _positive(var_p_plus, 'var_p_plus')
        return cls(math.sqrt(var_x_minus), 1.0 / math.sqrt(var_p_plus),
                   dimension, description)

    def state_save(self):
        """Returns a JSON ready dict describing this state."""
        state = super().state_save()
        state['sigma_minus_mm'] = self._sigma_minus
        state['sigma_plus_mm'] = self._sigma_plus
        state['dimension'] = self._dimension
        return state

    @classmethod
    def state_load(cls, state):
        """Builds a state from a dict produced by state_save."""
        return cls(state['sigma_minus_mm'], state['sigma_plus_mm'],
                   state.get('dimension', 1), state.get('description'))

    @property
    def sigma_minus(self):
        """Returns the position-difference width (mm)."""
        return self._sigma_minus

    @property
    def sigma_plus(self):
        """Returns the position-sum width (mm)."""
        return self._sigma_plus

    @property
    def dimension(self):
        """Returns the number of transverse axes modeled."""
        return self._dimension

    @property
    def is_product(self):
        """True when the wavefunction factorizes into single-party Gaussians."""
        return self._sigma_plus == self._sigma_minus

    def criterion_product(self):
        """(x1 - x2) variance times (p1 + p2) variance, evaluated exactly."""
        return (self._sigma_minus / self._sigma_plus) ** 2

    def with_dimension(self, dimension):
        """Return the same widths modeled on a different number of axes."""
        return DoubleGaussianState(self._sigma_minus, self._sigma_plus,
                                   dimension, self._description)

    def description_pretty(self, prefix='State'):
        """State description, as text string (auto-generated if not set)."""
        if self._description:
            return self._description
        return '{} sigma-={:.4g} mm sigma+={:.4g} mm'.format(
            prefix, self._sigma_minus, self._sigma_plus)


class StorageChannel(Node):
    """Represents the additive Gaussian broadening introduced by storage."""

    def __init__(self, beta_x=0.0, beta_p=0.0, efficiency=1.0, description=None):
        """Initializes StorageChannel object.

        beta_x: Added position-difference variance in mm^2 (default 0).
        beta_p: Added momentum-sum variance in rad^2/mm^2 (default 0).
        efficiency: Retrieval efficiency in (0, 1] (default 1).
        description: Free text label (default None).
        """
        # Let Node initialize common things
        super().__init__('StorageChannel', description)
        self._beta_x = self._non_negative(beta_x, 'beta_x')
        self._beta_p = self._non_negative(beta_p, 'beta_p')
        try:
            efficiency = float(efficiency)
        except (TypeError, ValueError):
            raise StateError('efficiency must be a number, got {!r}'.format(efficiency))
        if not (0.0 < efficiency <= 1.0):
            raise StateError('efficiency must lie in (0, 1], got {!r}'.format(efficiency))
        self._efficiency = efficiency

    @staticmethod
    def _non_negative(value, name):
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise StateError('{} must be a number, got {!r}'.format(name, value))
        if not math.isfinite(value) or value < 0.0:
            raise StateError('{} must be non-negative and finite, got {!r}'.format(name, value))
        return value

    @classmethod
    def identity(cls):
        """Channel that leaves every state unchanged."""
        return cls(0.0, 0.0, 1.0, 'identity')

    @classmethod
    def from_rows(cls, before, after, efficiency=1.0):
        """Calibrate betas from variances measured before and after storage.

        before/after: Objects with var_x_minus and var_p_plus attributes,
        e.g. VarianceMeasurement.
        """
        return cls(after.var_x_minus - before.var_x_minus,
                   after.var_p_plus - before.var_p_plus,
                   efficiency)

    def __add__(self, other):
        """Chain two channels: betas add, efficiencies multiply."""
        if not isinstance(other, StorageChannel):
            return NotImplemented
        return StorageChannel(self._beta_x + other.beta_x,
                              self._beta_p + other.beta_p,
                              self._efficiency * other.efficiency)

    def state_save(self):
        """Returns a JSON ready dict describing this channel."""
        state = super().state_save()
        state['beta_x_mm2'] = self._beta_x
        state['beta_p_per_mm2'] = self._beta_p
        state['efficiency'] = self._efficiency
        return state

    @classmethod
    def state_load(cls, state):
        """Builds a channel from a dict produced by state_save."""
        return cls(state['beta_x_mm2'], state['beta_p_per_mm2'],
                   state.get('efficiency', 1.0), state.get('description'))

    @property
    def beta_x(self):
        """Returns the added position-difference variance (mm^2)."""
        return self._beta_x

    @property
    def beta_p(self):
        """Returns the added momentum-sum variance (rad^2/mm^2)."""
        return self._beta_p

    @property
    def efficiency(self):
        """Returns the retrieval efficiency."""
        return self._efficiency


def momentum_wavefunction(state, p_a, p_b, p_a_y=0.0, p_b_y=0.0):
    """Momentum-space amplitude of the state.

    p_a, p_b: x momenta (rad/mm) of the two parties, scalars or arrays.
    p_a_y, p_b_y: y momenta, only meaningful for dimension 2 (default 0).
    """
    p_a = _finite(p_a, 'p_a')
    p_b = _finite(p_b, 'p_b')
    p_a_y = _finite(p_a_y, 'p_a_y')
    p_b_y = _finite(p_b_y, 'p_b_y')
    sum2 = (p_a + p_b) ** 2
    diff2 = (p_a - p_b) ** 2
    if state.dimension == 2:
        sum2 = sum2 + (p_a_y + p_b_y) ** 2
        diff2 = diff2 + (p_a_y - p_b_y) ** 2
    elif np.any(p_a_y != 0.0) or np.any(p_b_y != 0.0):
        raise StateError('y momenta given for a one-dimensional state')
    prefactor = state.sigma_plus * state.sigma_minus / math.pi
    if state.dimension == 1:
        prefactor = math.sqrt(prefactor)
    return prefactor * np.exp(-state.sigma_plus ** 2 * sum2 / 4.0
                              - state.sigma_minus ** 2 * diff2 / 4.0)


def position_wavefunction(state, r_a, r_b, r_a_y=0.0, r_b_y=0.0):
    """Position-space amplitude of the state.

    r_a, r_b: x positions (mm) of the two parties, scalars or arrays.
    r_a_y, r_b_y: y positions, only meaningful for dimension 2 (default 0).
    """
    r_a = _finite(r_a, 'r_a')
    r_b = _finite(r_b, 'r_b')
    r_a_y = _finite(r_a_y, 'r_a_y')
    r_b_y = _finite(r_b_y, 'r_b_y')
    diff2 = (r_a - r_b) ** 2
    sum2 = (r_a + r_b) ** 2
    if state.dimension == 2:
        diff2 = diff2 + (r_a_y - r_b_y) ** 2
        sum2 = sum2 + (r_a_y + r_b_y) ** 2
    elif np.any(r_a_y != 0.0) or np.any(r_b_y != 0.0):
        raise StateError('y positions given for a one-dimensional state')
    prefactor = 1.0 / (math.pi * state.sigma_plus * state.sigma_minus)
    if state.dimension == 1:
        prefactor = math.sqrt(prefactor)
    return prefactor * np.exp(-diff2 / (4.0 * state.sigma_minus ** 2)
                              - sum2 / (4.0 * state.sigma_plus ** 2))


def marginal_variances(state):
    """Variances of the collective coordinates, per transverse axis."""
    return {
        'var_x_minus': state.sigma_minus ** 2,
        'var_p_plus': 1.0 / state.sigma_plus ** 2,
        'var_x_plus': state.sigma_plus ** 2,
        'var_p_minus': 1.0 / state.sigma_minus ** 2,
        }


def apply_storage(state, channel):
    """Return the state after one pass through a storage channel.

    The (x1 - x2) variance grows by beta_x and the (p1 + p2) variance by
    beta_p, which keeps the result a double-Gaussian state. A pure state
    cannot go past the separability boundary, so channels that would
    push sigma_plus below sigma_minus are rejected.
    """
    if not isinstance(channel, StorageChannel):
        raise StateError('channel must be a StorageChannel, got {!r}'.format(channel))
    var_x_minus = state.sigma_minus ** 2 + channel.beta_x
    var_p_plus = 1.0 / state.sigma_plus ** 2 + channel.beta_p
    sigma_minus = math.sqrt(var_x_minus)
    sigma_plus = 1.0 / math.sqrt(var_p_plus)
    if sigma_plus < sigma_minus:
        raise StateError('storage channel {} drives the state past the separability boundary'
                         .format(channel.state_save()))
    _LOGGER.debug('apply_storage: sigma- %.6g -> %.6g, sigma+ %.6g -> %.6g',
                  state.sigma_minus, sigma_minus, state.sigma_plus, sigma_plus)
    return DoubleGaussianState(sigma_minus, sigma_plus, state.dimension, state.description)


def _grid(half_width, n_points):
    positions = np.linspace(-half_width, half_width, n_points)
    return positions, positions[1] - positions[0]


def probability_norm(state, domain='position', n_points=2048, span=WINDOW_WAISTS):
    """Numerically integrate |wavefunction|^2 over a square grid.

    domain: 'position' or 'momentum'.
    n_points: Grid points per coordinate (default 2048).
    span: Grid half-width in units of the widest marginal (default 6).

    For dimension 2 the four-fold integral is assembled from the x-plane
    integral using the separability of the wavefunction in x and y.
    """
    if domain == 'position':
        half_width = span * max(state.sigma_plus, state.sigma_minus)
        function = position_wavefunction
    elif domain == 'momentum':
        half_width = span * max(1.0 / state.sigma_plus, 1.0 / state.sigma_minus)
        function = momentum_wavefunction
    else:
        raise StateError('domain must be position or momentum, got {!r}'.format(domain))
    axis, step = _grid(half_width, n_points)
    a, b = np.meshgrid(axis, axis, indexing='ij')
    plane = np.sum(np.abs(function(state, a, b)) ** 2) * step * step
    if state.dimension == 1:
        return plane
    peak = float(function(state, 0.0, 0.0))
    return plane ** 2 / peak ** 2


def fourier_transform_position(state, p_a, p_b, n_points=4096, span=WINDOW_WAISTS):
    """Discrete Fourier transform of the position wavefunction.

    Evaluates (1/2pi) * sum phi(x_a, x_b) exp(-i (p_a x_a + p_b x_b)) dx^2
    on a uniform grid spanning +-span times the widest width, at every
    pair of the requested momenta. Returns a complex array of shape
    (len(p_a), len(p_b)).
    """
    p_a = np.atleast_1d(_finite(p_a, 'p_a'))
    p_b = np.atleast_1d(_finite(p_b, 'p_b'))
    axis_state = state.with_dimension(1)
    half_width = span * max(state.sigma_plus, state.sigma_minus)
    axis, step = _grid(half_width, n_points)
    a, b = np.meshgrid(axis, axis, indexing='ij')
    plane = position_wavefunction(axis_state, a, b)
    phase_a = np.outer(p_a, axis)
    phase_b = np.outer(p_b, axis)
    # exp(-i p x) split into real matrix products
    left_re = np.cos(phase_a) @ plane
    left_im = -np.sin(phase_a) @ plane
    right_re = np.cos(phase_b).T
    right_im = -np.sin(phase_b).T
    transform = (left_re @ right_re - left_im @ right_im) \
        + 1j * (left_re @ right_im + left_im @ right_re)
    transform *= step * step / TWO_PI
    if state.dimension == 2:
        # y axes evaluated at zero momentum
        transform *= float(momentum_wavefunction(axis_state, 0.0, 0.0))
    _LOGGER.debug('fourier_transform_position: %d x %d grid, %d x %d momenta',
                  n_points, n_points, len(p_a), len(p_b))
    return transform
