"""PyEprLab Criteria.

EPR-paradox, inseparability and Duan-sum criteria on measured or model
variances, with first-order error propagation.
"""
from collections import namedtuple
import logging
import math

from ..Const import *
from ..Error import StateError
from ..Node import Node

_LOGGER = logging.getLogger(__name__)

CriterionResult = namedtuple('CriterionResult', ['satisfied', 'product'])

# Marker written in place of an infinite sigma margin
EXACT_MARGIN = 'exact'


def _number(value, name, allow_zero):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise StateError('{} must be a number, got {!r}'.format(name, value))
    if not math.isfinite(value) or value < 0.0 or (value == 0.0 and not allow_zero):
        raise StateError('{} out of range: {!r}'.format(name, value))
    return value


class VarianceMeasurement(Node):
    """Represents a pair of measured (or model) conditional variances."""

    def __init__(self, var_x_minus, var_p_plus, err_x=0.0, err_p=0.0,
                 label=None, clamped=False):
        """Initializes VarianceMeasurement object.

        var_x_minus: (x1 - x2) variance in mm^2.
        var_p_plus: (p1 + p2) variance in rad^2/mm^2.
        err_x: One standard deviation of var_x_minus (default 0).
        err_p: One standard deviation of var_p_plus (default 0).
        label: Free text label, e.g. a Table 1 row name (default None).
        clamped: True when a variance was clamped to zero because the
        fitted blur fell below the detector resolution (default False).
        """
        # Let Node initialize common things
        super().__init__('VarianceMeasurement', label)
        self._clamped = bool(clamped)
        # Clamped extractions may legitimately sit at zero
        self._var_x_minus = _number(var_x_minus, 'var_x_minus', self._clamped)
        self._var_p_plus = _number(var_p_plus, 'var_p_plus', self._clamped)
        self._err_x = _number(err_x, 'err_x', True)
        self._err_p = _number(err_p, 'err_p', True)

    @classmethod
    def from_state(cls, state, label=None):
        """Exact, error-free variances of a DoubleGaussianState."""
        return cls(state.sigma_minus ** 2, 1.0 / state.sigma_plus ** 2,
                   label=label or state.description)

    def state_save(self):
        """Returns a JSON ready dict describing this measurement."""
        state = {
            'var_x_minus_mm2': self._var_x_minus,
            'err_x_mm2': self._err_x,
            'var_p_plus_per_mm2': self._var_p_plus,
            'err_p_per_mm2': self._err_p,
            'clamped': self._clamped,
            }
        if self._description is not None:
            state['label'] = self._description
        return state

    @classmethod
    def state_load(cls, state):
        """Builds a measurement from a dict produced by state_save."""
        try:
            return cls(state['var_x_minus_mm2'], state['var_p_plus_per_mm2'],
                       state.get('err_x_mm2', 0.0), state.get('err_p_per_mm2', 0.0),
                       state.get('label'), state.get('clamped', False))
        except KeyError as exc:
            raise StateError('measurement is missing {}'.format(exc))

    @property
    def var_x_minus(self):
        """Returns the (x1 - x2) variance (mm^2)."""
        return self._var_x_minus

    @property
    def var_p_plus(self):
        """Returns the (p1 + p2) variance (rad^2/mm^2)."""
        return self._var_p_plus

    @property
    def err_x(self):
        """Returns the standard deviation of var_x_minus."""
        return self._err_x

    @property
    def err_p(self):
        """Returns the standard deviation of var_p_plus."""
        return self._err_p

    @property
    def label(self):
        """Returns the label of this measurement."""
        return self._description

    @property
    def clamped(self):
        """Returns True if a variance was clamped at zero."""
        return self._clamped

    @property
    def product(self):
        """Returns var_x_minus * var_p_plus (hbar^2)."""
        return self._var_x_minus * self._var_p_plus

    def description_pretty(self, prefix='Measurement'):
        """Measurement description, as text string (auto-generated if not set)."""
        if self._description:
            return self._description
        return '{} ({:.4g}, {:.4g})'.format(prefix, self._var_x_minus, self._var_p_plus)


class CriterionReport(Node):
    """Outcome of classifying one VarianceMeasurement."""

    REGIME_EPR_PARADOX = 0
    REGIME_ENTANGLED = 1
    REGIME_CLASSICAL = 2

    REGIME_STR = {
        REGIME_EPR_PARADOX : 'epr_paradox',
        REGIME_ENTANGLED : 'entangled',
        REGIME_CLASSICAL : 'classical',
        }

    # Strength ordering, strongest first
    REGIME_RANK = {
        REGIME_EPR_PARADOX : 0,
        REGIME_ENTANGLED : 1,
        REGIME_CLASSICAL : 2,
        }

    def __init__(self, measurement, product, product_err, duan_sum_optimized,
                 regime, sigma_margin):
        """Initializes CriterionReport object.

        measurement: The VarianceMeasurement this report classifies.
        product: var_x_minus * var_p_plus.
        product_err: First-order standard deviation of product.
        duan_sum_optimized: Duan sum at the optimal scale.
        regime: One of the REGIME_* constants.
        sigma_margin: Distance of product from the deciding threshold in
        units of product_err, math.inf when product_err is 0.
        """
        # Let Node initialize common things
        super().__init__('CriterionReport', measurement.label)
        if regime not in self.REGIME_STR:
            raise StateError('unknown regime {!r}'.format(regime))
        self._measurement = measurement
        self._product = product
        self._product_err = product_err
        self._duan_sum_optimized = duan_sum_optimized
        self._regime = regime
        self._sigma_margin = sigma_margin

    def state_save(self):
        """Returns the JSON report for this classification."""
        state = self._measurement.state_save()
        state['product_hbar2'] = self._product
        state['product_err'] = self._product_err
        state['duan_sum_optimized'] = self._duan_sum_optimized
        state['regime'] = self.regime_str
        state['paradox_satisfied'] = self._product < PARADOX_THRESHOLD
        state['inseparable'] = self._product < INSEPARABILITY_THRESHOLD
        state['duan_satisfied'] = self._duan_sum_optimized < DUAN_THRESHOLD
        if math.isinf(self._sigma_margin):
            state['sigma_margin'] = EXACT_MARGIN
        else:
            state['sigma_margin'] = self._sigma_margin
        return state

    @classmethod
    def state_load(cls, state):
        """Rebuilds a report by classifying the stored measurement."""
        return classify(VarianceMeasurement.state_load(state))

    @property
    def measurement(self):
        """Returns the classified measurement."""
        return self._measurement

    @property
    def product(self):
        """Returns the variance product (hbar^2)."""
        return self._product

    @property
    def product_err(self):
        """Returns the standard deviation of the product."""
        return self._product_err

    @property
    def duan_sum_optimized(self):
        """Returns the Duan sum minimized over the scale."""
        return self._duan_sum_optimized

    @property
    def regime(self):
        """Returns the regime constant."""
        return self._regime

    @property
    def regime_str(self):
        """Returns the regime as text."""
        return self.REGIME_STR[self._regime]

    @property
    def sigma_margin(self):
        """Returns the margin to the deciding threshold in standard deviations."""
        return self._sigma_margin

    def is_exact(self):
        """True when the report carries no uncertainty."""
        return math.isinf(self._sigma_margin)

    def description_pretty(self, prefix='Report'):
        """Report description, as text string."""
        if self.is_exact():
            margin = EXACT_MARGIN
        else:
            margin = '{:.2f} sigma'.format(self._sigma_margin)
        return '{} {}: product {:.3f} +- {:.3f}, {} ({})'.format(
            prefix, self._measurement.description_pretty(), self._product,
            self._product_err, self.regime_str, margin)


def paradox_criterion(measurement):
    """EPR paradox test: product < 1/4, strictly."""
    product = measurement.product
    return CriterionResult(product < PARADOX_THRESHOLD, product)


def inseparability_criterion(measurement):
    """Inseparability test: product < 1, strictly."""
    product = measurement.product
    return CriterionResult(product < INSEPARABILITY_THRESHOLD, product)


def duan_sum(measurement, scale):
    """var_x_minus / scale + scale * var_p_plus for a positive scale."""
    try:
        scale = float(scale)
    except (TypeError, ValueError):
        raise StateError('scale must be a number, got {!r}'.format(scale))
    if not math.isfinite(scale) or scale <= 0.0:
        raise StateError('scale must be positive and finite, got {!r}'.format(scale))
    return measurement.var_x_minus / scale + scale * measurement.var_p_plus


def optimal_scale(measurement):
    """Scale minimizing duan_sum."""
    if measurement.var_p_plus == 0.0 or measurement.var_x_minus == 0.0:
        raise StateError('optimal scale undefined for a zero variance')
    return math.sqrt(measurement.var_x_minus / measurement.var_p_plus)


def duan_minimum(measurement):
    """Duan sum at the optimal scale, equal to 2 sqrt(product)."""
    if measurement.var_p_plus == 0.0 or measurement.var_x_minus == 0.0:
        return 0.0
    return duan_sum(measurement, optimal_scale(measurement))


def product_error(measurement):
    """First-order standard deviation of the variance product.

    Written in absolute form, equal to product times the relative errors
    added in quadrature, and defined at a clamped zero variance.
    """
    return math.hypot(measurement.err_x * measurement.var_p_plus,
                      measurement.var_x_minus * measurement.err_p)


def classify(measurement):
    """Classify a measurement into a CriterionReport."""
    product = measurement.product
    product_err = product_error(measurement)
    if product < PARADOX_THRESHOLD:
        regime = CriterionReport.REGIME_EPR_PARADOX
        distance = PARADOX_THRESHOLD - product
    elif product < INSEPARABILITY_THRESHOLD:
        regime = CriterionReport.REGIME_ENTANGLED
        distance = INSEPARABILITY_THRESHOLD - product
    else:
        regime = CriterionReport.REGIME_CLASSICAL
        distance = product - INSEPARABILITY_THRESHOLD
    if product_err == 0.0:
        sigma_margin = math.inf
    else:
        sigma_margin = distance / product_err
    report = CriterionReport(measurement, product, product_err,
                             duan_minimum(measurement), regime, sigma_margin)
    _LOGGER.debug('classify: ' + report.description_pretty())
    return report


def report_to_json(report):
    """JSON ready dict for a CriterionReport."""
    return report.state_save()


def regime_not_stronger(before, after):
    """True if report `after` is in the same or a weaker regime than `before`."""
    return CriterionReport.REGIME_RANK[after.regime] >= \
        CriterionReport.REGIME_RANK[before.regime]
