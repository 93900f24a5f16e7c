"""PyEprLab Optics.

Apertures, paraxial ray-transfer elements and the lens focal-plane map
between transverse momentum and position.
"""
import logging
import math

import numpy as np

from ..Const import *
from ..Error import ApertureError, PatternError, QuadratureError
from ..Node import Node

_LOGGER = logging.getLogger(__name__)


def _length(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ApertureError('{} must be a number, got {!r}'.format(name, value))
    if not math.isfinite(value) or value <= 0.0:
        raise ApertureError('{} must be positive and finite, got {!r}'.format(name, value))
    return value


class Aperture(Node):
    """Transverse amplitude mask.

    Every variant is a Gaussian envelope exp(-x^2 * gaussian_coefficient)
    times the indicator of a union of intervals, which is what the
    quadrature and the closed-form oracles rely on.
    """

    KIND_DOUBLE_SLIT = 0
    KIND_RECT_SLIT = 1
    KIND_GAUSSIAN_PINHOLE = 2
    KIND_OPEN = 3

    KIND_STR = {
        KIND_DOUBLE_SLIT : 'double_slit',
        KIND_RECT_SLIT : 'rect_slit',
        KIND_GAUSSIAN_PINHOLE : 'gaussian_pinhole',
        KIND_OPEN : 'open',
        }

    def __init__(self, kind, description=None):
        """Initializes Aperture object.

        kind: One of the KIND_* constants.
        description: Free text label (default None).
        """
        # Let Node initialize common things
        super().__init__('Aperture', description)
        self._kind = kind

    @property
    def kind(self):
        """Returns the aperture kind constant."""
        return self._kind

    @property
    def kind_str(self):
        """Returns the aperture kind as text."""
        return self.KIND_STR[self._kind]

    @property
    def gaussian_coefficient(self):
        """Coefficient g of the amplitude envelope exp(-g x^2), in 1/mm^2."""
        return 0.0

    @property
    def support_half_width(self):
        """Half-width outside of which transmission is zero, or None."""
        return None

    def segments(self, window=None):
        """Support intervals (lo, hi) clipped to [-window, window].

        window: Half-width to clip to, None for unbounded (default None).
        """
        limit = math.inf if window is None else float(window)
        return [(-limit, limit)]

    def natural_window(self, envelope=0.0, span=WINDOW_WAISTS):
        """Half-width beyond which the (enveloped) amplitude is negligible.

        envelope: Extra Gaussian coefficient multiplied in (default 0).
        span: Window in units of the envelope waist (default 6).
        Returns None if the amplitude has no finite extent.
        """
        coefficient = self.gaussian_coefficient + envelope
        windows = []
        if coefficient > 0.0:
            windows.append(span / math.sqrt(coefficient))
        if self.support_half_width is not None:
            windows.append(self.support_half_width)
        if not windows:
            return None
        return min(windows)

    def transmission(self, x):
        """Amplitude transmission at positions x (mm)."""
        x = np.asarray(x, dtype=np.float64)
        inside = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.segments():
            inside |= (x >= lo) & (x <= hi)
        return np.where(inside, np.exp(-self.gaussian_coefficient * x * x), 0.0)

    def intensity_sigma(self):
        """Standard deviation of the |transmission|^2 acceptance profile (mm)."""
        raise ApertureError('{} has no single resolution width'.format(self.kind_str))

    def state_save(self):
        """Returns a JSON ready dict describing this aperture."""
        state = super().state_save()
        state['kind'] = self.kind_str
        return state

    @classmethod
    def state_load(cls, state):
        """Builds the matching aperture variant from a state_save dict."""
        kind = state.get('kind')
        description = state.get('description')
        try:
            if kind == 'double_slit':
                return DoubleSlitEffective(state['bar_width_mm'], state['mode_waist_mm'],
                                           description)
            if kind == 'rect_slit':
                return RectSlit(state['width_mm'], description)
            if kind == 'gaussian_pinhole':
                return GaussianPinhole(state['waist_mm'], description)
            if kind == 'open':
                return Open(description)
        except KeyError as exc:
            raise ApertureError('aperture {!r} is missing {}'.format(kind, exc))
        raise ApertureError('unknown aperture kind {!r}'.format(kind))


class DoubleSlitEffective(Aperture):
    """Opaque bar centered inside a Gaussian mode."""

    def __init__(self, bar_width, mode_waist, description=None):
        """Initializes DoubleSlitEffective object.

        bar_width: Width of the opaque bar in mm.
        mode_waist: 1/e amplitude radius of the Gaussian mode in mm.
        """
        # Let Aperture initialize common things
        super().__init__(self.KIND_DOUBLE_SLIT, description)
        self._bar_width = _length(bar_width, 'bar_width')
        self._mode_waist = _length(mode_waist, 'mode_waist')

    @property
    def bar_width(self):
        """Returns the bar width (mm)."""
        return self._bar_width

    @property
    def mode_waist(self):
        """Returns the mode waist (mm)."""
        return self._mode_waist

    @property
    def gaussian_coefficient(self):
        return 1.0 / self._mode_waist ** 2

    def segments(self, window=None):
        half = self._bar_width / 2.0
        limit = math.inf if window is None else float(window)
        if limit <= half:
            return []
        return [(-limit, -half), (half, limit)]

    def transmission(self, x):
        # Bar edges transmit
        x = np.asarray(x, dtype=np.float64)
        blocked = np.abs(x) < self._bar_width / 2.0
        return np.where(blocked, 0.0, np.exp(-x * x / self._mode_waist ** 2))

    def state_save(self):
        state = super().state_save()
        state['bar_width_mm'] = self._bar_width
        state['mode_waist_mm'] = self._mode_waist
        return state


class RectSlit(Aperture):
    """Hard-edged slit of a given full width."""

    def __init__(self, width, description=None):
        """Initializes RectSlit object.

        width: Full slit width in mm.
        """
        # Let Aperture initialize common things
        super().__init__(self.KIND_RECT_SLIT, description)
        self._width = _length(width, 'width')

    @property
    def width(self):
        """Returns the slit width (mm)."""
        return self._width

    @property
    def support_half_width(self):
        return self._width / 2.0

    def segments(self, window=None):
        half = self._width / 2.0
        if window is not None:
            half = min(half, float(window))
        return [(-half, half)]

    def intensity_sigma(self):
        return self._width / math.sqrt(12.0)

    def state_save(self):
        state = super().state_save()
        state['width_mm'] = self._width
        return state


class GaussianPinhole(Aperture):
    """Gaussian acceptance, e.g. a single-mode fiber head."""

    def __init__(self, waist, description=None):
        """Initializes GaussianPinhole object.

        waist: 1/e amplitude radius in mm.
        """
        # Let Aperture initialize common things
        super().__init__(self.KIND_GAUSSIAN_PINHOLE, description)
        self._waist = _length(waist, 'waist')

    @property
    def waist(self):
        """Returns the waist (mm)."""
        return self._waist

    @property
    def gaussian_coefficient(self):
        return 1.0 / self._waist ** 2

    def intensity_sigma(self):
        return self._waist / 2.0

    def state_save(self):
        state = super().state_save()
        state['waist_mm'] = self._waist
        return state


class Open(Aperture):
    """Unit transmission everywhere."""

    def __init__(self, description=None):
        # Let Aperture initialize common things
        super().__init__(self.KIND_OPEN, description)

    def intensity_sigma(self):
        return 0.0


def transmission(aperture, x):
    """Amplitude transmission of aperture at x (mm), in [0, 1]."""
    return aperture.transmission(x)


class RayTransfer(Node):
    """Paraxial 2x2 ray-transfer matrix acting on (x, theta)."""

    DETERMINANT_TOLERANCE = 1.0e-12

    def __init__(self, a, b, c, d, description=None):
        """Initializes RayTransfer object.

        a, b, c, d: Matrix entries; b in mm, c in 1/mm.
        description: Free text label (default None).
        """
        # Let Node initialize common things
        super().__init__('RayTransfer', description)
        self._a, self._b, self._c, self._d = (float(a), float(b), float(c), float(d))
        det = self._a * self._d - self._b * self._c
        scale = max(1.0, abs(self._a * self._d), abs(self._b * self._c))
        if not math.isfinite(det) or abs(det - 1.0) > self.DETERMINANT_TOLERANCE * scale:
            raise ApertureError('ray transfer determinant {!r} is not 1'.format(det))

    @classmethod
    def from_matrix(cls, matrix, description=None):
        """Builds an element from a 2x2 array-like."""
        matrix = np.asarray(matrix, dtype=np.float64)
        return cls(matrix[0, 0], matrix[0, 1], matrix[1, 0], matrix[1, 1], description)

    @property
    def a(self):
        return self._a

    @property
    def b(self):
        return self._b

    @property
    def c(self):
        return self._c

    @property
    def d(self):
        return self._d

    @property
    def matrix(self):
        """Returns the entries as a 2x2 numpy array."""
        return np.array([[self._a, self._b], [self._c, self._d]])

    @property
    def determinant(self):
        return self._a * self._d - self._b * self._c

    def apply(self, x, theta):
        """Propagate a ray (x in mm, theta in rad)."""
        return (self._a * x + self._b * theta, self._c * x + self._d * theta)

    def then(self, other):
        """Element equivalent to traversing self and then other."""
        return RayTransfer.from_matrix(other.matrix @ self.matrix)

    def state_save(self):
        state = super().state_save()
        state['abcd'] = [self._a, self._b, self._c, self._d]
        return state

    @classmethod
    def state_load(cls, state):
        return cls(*state['abcd'], description=state.get('description'))


class FreeSpace(RayTransfer):
    """Propagation over a distance."""

    def __init__(self, distance):
        distance = _length(distance, 'distance')
        super().__init__(1.0, distance, 0.0, 1.0, 'free_space({:g})'.format(distance))


class ThinLens(RayTransfer):
    """Thin lens of focal length f."""

    def __init__(self, focal_length):
        focal_length = _length(focal_length, 'focal_length')
        super().__init__(1.0, 0.0, -1.0 / focal_length, 1.0,
                         'thin_lens({:g})'.format(focal_length))


class FourF(RayTransfer):
    """4F relay with lenses fa then fb, imaging with magnification -fb/fa."""

    def __init__(self, focal_a, focal_b):
        focal_a = _length(focal_a, 'focal_a')
        focal_b = _length(focal_b, 'focal_b')
        super().__init__(-focal_b / focal_a, 0.0, 0.0, -focal_a / focal_b,
                         'four_f({:g}, {:g})'.format(focal_a, focal_b))


ELEMENT_KINDS = {
    'free_space' : FreeSpace,
    'thin_lens' : ThinLens,
    'four_f' : FourF,
    }


def element(kind, *lengths):
    """Build a RayTransfer element by kind name.

    kind: 'free_space' (distance), 'thin_lens' (f) or 'four_f' (fa, fb).
    """
    if kind not in ELEMENT_KINDS:
        raise ApertureError('unknown element kind {!r}'.format(kind))
    try:
        return ELEMENT_KINDS[kind](*lengths)
    except TypeError:
        raise ApertureError('wrong number of lengths for {}: {!r}'.format(kind, lengths))


def compose(*elements):
    """Element equivalent to traversing elements in the order given."""
    if not elements:
        raise ApertureError('compose needs at least one element')
    matrix = np.eye(2)
    for item in elements:
        matrix = item.matrix @ matrix
    return RayTransfer.from_matrix(matrix)


def focal_map(focal_length):
    """Front focal plane to back focal plane of a single lens."""
    return compose(FreeSpace(focal_length), ThinLens(focal_length), FreeSpace(focal_length))


def _wavelength_mm(lambda_nm):
    return _length(lambda_nm, 'lambda_nm') / NM_PER_MM


def focal_plane_position(p_tilde, lambda_nm, f2):
    """Back focal plane position (mm) of transverse momentum p_tilde (rad/mm).

    A ray at angle theta = lambda p / 2pi through the front focal point
    lands at B * theta with B = f2.
    """
    theta = np.asarray(p_tilde, dtype=np.float64) * _wavelength_mm(lambda_nm) / TWO_PI
    position, _ = focal_map(f2).apply(0.0, theta)
    return position


def focal_plane_momentum(x, lambda_nm, f2):
    """Transverse momentum (rad/mm) imaged to focal plane position x (mm)."""
    return TWO_PI * np.asarray(x, dtype=np.float64) / (_wavelength_mm(lambda_nm) * _length(f2, 'f2'))


class OpticsConfig(Node):
    """Wavelength and focal lengths of the setup."""

    def __init__(self, lambda_nm=WAVELENGTH_NM, f1=F1_MM, f2=F2_MM, fc=FC_MM,
                 magnification_imaging_arm=None, description=None):
        """Initializes OpticsConfig object.

        lambda_nm: Signal wavelength in nm (default 795).
        f1: Relay lens focal length in mm (default 500).
        f2: Fourier lens focal length in mm (default 32).
        fc: Fiber coupler focal length in mm, documentation only (default 11.07).
        magnification_imaging_arm: Bar plane to scan plane magnification;
        None derives it from the imaging relay (default None).
        """
        # Let Node initialize common things
        super().__init__('OpticsConfig', description)
        self._lambda_nm = _length(lambda_nm, 'lambda_nm')
        self._f1 = _length(f1, 'f1')
        self._f2 = _length(f2, 'f2')
        self._fc = _length(fc, 'fc')
        relay = self.imaging_relay()
        if magnification_imaging_arm is None:
            self._magnification = abs(relay.a)
        else:
            self._magnification = _length(magnification_imaging_arm,
                                          'magnification_imaging_arm')
            if abs(self._magnification - abs(relay.a)) > 1.0e-9:
                _LOGGER.debug('imaging arm magnification {} overrides relay {}'
                              .format(self._magnification, relay.a))

    @property
    def lambda_nm(self):
        return self._lambda_nm

    @property
    def lambda_mm(self):
        return self._lambda_nm / NM_PER_MM

    @property
    def f1(self):
        return self._f1

    @property
    def f2(self):
        return self._f2

    @property
    def fc(self):
        return self._fc

    @property
    def magnification(self):
        """Returns the imaging arm magnification."""
        return self._magnification

    def imaging_relay(self):
        """Two sequential 4F relays built from f1 lenses."""
        return compose(FourF(self._f1, self._f1), FourF(self._f1, self._f1))

    def fourier_map(self):
        """Front-to-back focal map of the f2 lens."""
        return focal_map(self._f2)

    def momentum_to_position(self, p_tilde):
        return focal_plane_position(p_tilde, self._lambda_nm, self._f2)

    def position_to_momentum(self, x):
        return focal_plane_momentum(x, self._lambda_nm, self._f2)

    def state_save(self):
        state = super().state_save()
        state['lambda_nm'] = self._lambda_nm
        state['f1_mm'] = self._f1
        state['f2_mm'] = self._f2
        state['fc_mm'] = self._fc
        state['magnification_imaging_arm'] = self._magnification
        return state

    @classmethod
    def state_load(cls, state):
        return cls(state['lambda_nm'], state['f1_mm'], state['f2_mm'], state['fc_mm'],
                   state.get('magnification_imaging_arm'), state.get('description'))


def spectrum(aperture, k, envelope=0.0, scale=1.0, n_nodes=QUADRATURE_NODES, window=None):
    """Fourier integral of an aperture by Gauss-Legendre quadrature.

    Computes  integral T(x) exp(-envelope x^2) exp(-i scale k x) dx  over
    each support segment of the aperture inside +-window.

    aperture: Aperture to transform.
    k: Spatial frequencies (rad/mm), scalar or array.
    envelope: Extra Gaussian coefficient in 1/mm^2 (default 0).
    scale: Multiplier applied to k (default 1).
    n_nodes: Quadrature nodes per segment (default 512).
    window: Integration half-width; defaults to the natural window and
    must not be smaller than it.
    """
    if envelope < 0.0 or not math.isfinite(envelope):
        raise PatternError('envelope must be non-negative, got {!r}'.format(envelope))
    natural = aperture.natural_window(envelope)
    if window is None:
        window = natural
    if window is None:
        raise QuadratureError('aperture {} has no finite window'.format(aperture.kind_str))
    if natural is not None and window < natural * (1.0 - 1.0e-12):
        raise QuadratureError('window {:g} mm narrower than required {:g} mm'
                           .format(window, natural))
    k = np.asarray(k, dtype=np.float64)
    flat = k.ravel() * scale
    nodes, weights = np.polynomial.legendre.leggauss(int(n_nodes))
    result = np.zeros(flat.shape, dtype=np.complex128)
    for lo, hi in aperture.segments(window):
        half = (hi - lo) / 2.0
        if half <= 0.0:
            continue
        x = (hi + lo) / 2.0 + half * nodes
        f = half * weights * aperture.transmission(x) * np.exp(-envelope * x * x)
        for start in range(0, flat.size, 1024):
            phase = np.outer(flat[start:start + 1024], x)
            result[start:start + 1024] += np.cos(phase) @ f - 1j * (np.sin(phase) @ f)
    return result.reshape(k.shape)
