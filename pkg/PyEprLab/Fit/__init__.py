"""PyEprLab Fit.

Weighted least-squares fits of blurred-pattern models to coincidence
scans, and extraction of the conditional variances from the fitted
blurs.
"""
import logging
import math

import numpy as np
from scipy import optimize

from ..Const import *
from ..Criteria import VarianceMeasurement
from ..Error import FitError
from ..Node import Node
from ..Pattern import apply_detector, gaussian_blur

_LOGGER = logging.getLogger(__name__)

PARAMETERS = ('amplitude', 'background', 'center', 'blur_sigma')

FLAG_NONE = None
FLAG_FLAT = 'flat_data'
FLAG_BLUR_UNBOUNDED = 'blur_unbounded'
FLAG_MAX_ITERATIONS = 'max_iterations'


class FitResult(Node):
    """Represents the outcome of one pattern fit."""

    def __init__(self, amplitude, background, center, blur_sigma, errors,
                 chi2_per_dof, converged, flag=None, n_points=0, arm=ARM_IMAGE,
                 method=None, description=None):
        """Initializes FitResult object.

        amplitude, background: Counts.
        center: Pattern center in mm.
        blur_sigma: Fitted Gaussian blur in mm, not negative.
        errors: Dict of one standard deviation per parameter name.
        chi2_per_dof: Weighted chi-square per degree of freedom.
        converged: True if the optimizer met its tolerance.
        flag: Why a fit is not usable, or None (default None).
        n_points: Number of scan points fitted (default 0).
        arm: Arm of the fitted scan (default ARM_IMAGE).
        method: Optimizer that produced the result (default None).
        """
        # Let Node initialize common things
        super().__init__('FitResult', description)
        self._amplitude = float(amplitude)
        self._background = float(background)
        self._center = float(center)
        self._blur_sigma = abs(float(blur_sigma))
        self._errors = {}
        for name in PARAMETERS:
            value = float(errors.get(name, math.inf))
            if math.isnan(value) or value < 0.0:
                value = math.inf
            self._errors[name] = value
        self._chi2_per_dof = max(0.0, float(chi2_per_dof))
        self._converged = bool(converged)
        self._flag = flag
        self._n_points = int(n_points)
        self._arm = arm
        self._method = method

    @property
    def amplitude(self):
        return self._amplitude

    @property
    def background(self):
        return self._background

    @property
    def center(self):
        return self._center

    @property
    def blur_sigma(self):
        return self._blur_sigma

    @property
    def errors(self):
        """Returns one standard deviation per parameter."""
        return dict(self._errors)

    @property
    def blur_sigma_err(self):
        return self._errors['blur_sigma']

    @property
    def chi2_per_dof(self):
        return self._chi2_per_dof

    @property
    def converged(self):
        return self._converged

    @property
    def flag(self):
        return self._flag

    @property
    def n_points(self):
        return self._n_points

    @property
    def arm(self):
        return self._arm

    @property
    def method(self):
        return self._method

    def state_save(self):
        state = super().state_save()
        state['arm'] = ARM_STR[self._arm]
        state['amplitude'] = self._amplitude
        state['background'] = self._background
        state['center_mm'] = self._center
        state['blur_sigma_mm'] = self._blur_sigma
        state['errors'] = {name: (value if math.isfinite(value) else 'inf')
                           for name, value in self._errors.items()}
        state['chi2_per_dof'] = self._chi2_per_dof
        state['converged'] = self._converged
        state['flag'] = self._flag
        state['n_points'] = self._n_points
        state['method'] = self._method
        return state

    @classmethod
    def state_load(cls, state):
        errors = {name: float(value) for name, value in state.get('errors', {}).items()}
        return cls(state['amplitude'], state['background'], state['center_mm'],
                   state['blur_sigma_mm'], errors, state['chi2_per_dof'],
                   state['converged'], state.get('flag'), state.get('n_points', 0),
                   ARM_FROM_STR[state.get('arm', 'image')], state.get('method'),
                   state.get('description'))

    def description_pretty(self, prefix='Fit'):
        return '{} {}: blur {:.5g} +- {:.2g} mm, chi2/dof {:.3f}{}'.format(
            prefix, ARM_STR[self._arm], self._blur_sigma, self._errors['blur_sigma'],
            self._chi2_per_dof, '' if self._converged else ' (not converged)')


class BlurModel(object):
    """B + A * maxnorm(ideal * detector * Gaussian(s))(X - X0)."""

    def __init__(self, ideal, detector):
        self._grid = np.asarray(ideal.positions)
        self._spacing = ideal.spacing
        self._base = apply_detector(ideal.values, ideal.spacing, detector)
        self._max_blur = ideal.span / 6.0

    @property
    def max_blur(self):
        return self._max_blur

    def shape(self, blur):
        values = gaussian_blur(self._base, self._spacing, min(abs(blur), self._max_blur))
        peak = values.max()
        if peak <= 0.0:
            return np.zeros_like(values)
        return values / peak

    def __call__(self, params, positions, origin=0.0):
        amplitude, background, offset, blur = params
        shape = self.shape(blur)
        return background + amplitude * np.interp(positions - origin - offset,
                                                  self._grid, shape)


def _initial_guess(x, y, ideal, model):
    """Deterministic start: amplitude, background, centroid, blur."""
    edge = max(1, x.size // 8)
    background = float(np.median(np.concatenate((y[:edge], y[-edge:]))))
    amplitude = float(y.max() - y.min())
    weights = np.clip(y - background, 0.0, None)
    if weights.sum() > 0.0:
        origin = float(np.sum(weights * x) / weights.sum())
    else:
        origin = float(np.mean(x))
    # Blur from the second-moment excess of the data over the ideal curve
    inside = (ideal.positions >= x[0] - origin) & (ideal.positions <= x[-1] - origin)
    ideal_x = ideal.positions[inside]
    ideal_y = ideal.values[inside]
    blur = 0.0
    if weights.sum() > 0.0 and ideal_y.sum() > 0.0:
        data_var = np.sum(weights * (x - origin) ** 2) / weights.sum()
        ideal_var = np.sum(ideal_y * ideal_x ** 2) / ideal_y.sum()
        blur = math.sqrt(max(data_var - ideal_var, 0.0))
    step = float(np.median(np.diff(x)))
    blur = min(max(blur, step), model.max_blur / 2.0)
    return origin, np.array([amplitude, background, 0.0, blur])


def _jacobian(fun, params):
    """Central-difference Jacobian of a residual function."""
    base = fun(params)
    jac = np.empty((base.size, params.size))
    for index in range(params.size):
        step = 1.0e-6 * max(abs(params[index]), 1.0e-3)
        upper = params.copy()
        lower = params.copy()
        upper[index] += step
        lower[index] -= step
        jac[:, index] = (fun(upper) - fun(lower)) / (2.0 * step)
    return jac


def fit_pattern(scan, ideal, detector=None, init=None):
    """Fit a blurred ideal pattern to a coincidence scan.

    scan: CoincidenceScan with at least 8 points.
    ideal: Ideal PatternCurve whose grid covers the scan.
    detector: Detector acceptance folded into the model (default Open).
    init: Earlier FitResult to start from (default None).

    Residuals are weighted by sqrt(max(counts, 1)). The center is fitted
    as an offset from the data centroid, so shifting a scan moves only
    the fitted center. Levenberg-Marquardt runs first; a Nelder-Mead
    simplex takes over when it fails or the Jacobian loses rank.
    """
    x = np.asarray(scan.positions, dtype=np.float64)
    y = np.asarray(scan.counts, dtype=np.float64)
    if x.size < MIN_SCAN_POINTS:
        raise FitError('fit needs at least {} scan points, got {}'.format(MIN_SCAN_POINTS, x.size))
    if ideal.kind != scan.arm:
        _LOGGER.warning('fitting a {} scan with a {} pattern'.format(scan.arm_str, ideal.kind_str))
    model = BlurModel(ideal, detector)
    origin, start = _initial_guess(x, y, ideal, model)
    if x[-1] - origin > ideal.positions[-1] or x[0] - origin < ideal.positions[0]:
        raise FitError('ideal pattern grid does not cover the scan')
    if init is not None:
        start = np.array([init.amplitude, init.background, init.center - origin,
                          max(init.blur_sigma, 1.0e-9)])
    dof = x.size - len(PARAMETERS)
    if np.ptp(y) == 0.0:
        _LOGGER.warning('constant-count scan, nothing to fit')
        errors = dict.fromkeys(PARAMETERS, math.inf)
        return FitResult(0.0, float(y[0]), origin, 0.0, errors, 0.0, False, FLAG_FLAT,
                         x.size, scan.arm, None)
    weight = 1.0 / np.sqrt(np.maximum(y, 1.0))

    def residuals(params):
        return (y - model(params, x, origin)) * weight

    method = 'lm'
    flag = FLAG_NONE
    solution = optimize.least_squares(residuals, start, method='lm', x_scale='jac',
                                      ftol=FIT_FTOL, xtol=FIT_FTOL, gtol=FIT_FTOL,
                                      max_nfev=FIT_MAX_ITERATIONS * (start.size + 1))
    params = solution.x
    converged = bool(solution.success)
    jac = solution.jac
    if converged:
        # Second pass from the converged point at tight tolerances
        polish = optimize.least_squares(residuals, params, method='lm', x_scale='jac',
                                        ftol=FIT_POLISH_TOL, xtol=FIT_POLISH_TOL,
                                        gtol=FIT_POLISH_TOL,
                                        max_nfev=FIT_MAX_ITERATIONS * (start.size + 1))
        if polish.cost <= solution.cost:
            params = polish.x
            jac = polish.jac
    if not converged or np.linalg.matrix_rank(jac) < start.size:
        _LOGGER.warning('Levenberg-Marquardt {} ({}); falling back to Nelder-Mead'.format(
            'lost Jacobian rank' if converged else 'failed', solution.message))
        method = 'nelder-mead'

        def cost(params):
            return float(np.sum(residuals(params) ** 2))

        simplex = optimize.minimize(cost, params, method='Nelder-Mead',
                                    options={'xatol': 1.0e-10, 'fatol': FIT_FTOL,
                                             'maxiter': FIT_MAX_ITERATIONS * 20,
                                             'maxfev': FIT_MAX_ITERATIONS * 40})
        params = simplex.x
        converged = bool(simplex.success)
        if not converged:
            flag = FLAG_MAX_ITERATIONS
        jac = _jacobian(residuals, params)
    if abs(params[3]) >= model.max_blur:
        converged = False
        flag = FLAG_BLUR_UNBOUNDED
    chi2 = float(np.sum(residuals(params) ** 2))
    chi2_per_dof = chi2 / dof if dof > 0 else 0.0
    covariance = np.linalg.pinv(jac.T @ jac)
    sigmas = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    errors = dict(zip(PARAMETERS, sigmas))
    result = FitResult(params[0], params[1], origin + params[2], params[3], errors,
                       chi2_per_dof, converged, flag, x.size, scan.arm, method)
    if converged:
        _LOGGER.debug(result.description_pretty())
    else:
        _LOGGER.warning(result.description_pretty())
    return result


def detector_resolution(detector):
    """Equivalent Gaussian sigma of a detector acceptance (mm), 0 if none."""
    if detector is None:
        return 0.0
    return detector.intensity_sigma()


def extract_variances(image_fit, interference_fit, optics, detector_widths=(0.0, 0.0),
                      label=None):
    """Conditional variances from the two fitted blurs.

    detector_widths: Equivalent Gaussian sigmas (image, interference) in mm
    subtracted in quadrature from the fitted blurs; zeros attribute the
    whole blur to the state (default (0, 0)).
    """
    for fit in (image_fit, interference_fit):
        if not fit.converged:
            raise FitError('cannot extract variances from an unconverged {} fit ({})'
                           .format(ARM_STR[fit.arm], fit.flag))
    res_image, res_interference = (float(width) for width in detector_widths)
    if res_image < 0.0 or res_interference < 0.0:
        raise FitError('detector widths must be non-negative')
    magnification = optics.magnification
    to_momentum = (TWO_PI / (optics.lambda_mm * optics.f2)) ** 2
    blur_x = image_fit.blur_sigma
    blur_p = interference_fit.blur_sigma
    excess_x = blur_x ** 2 - res_image ** 2
    excess_p = blur_p ** 2 - res_interference ** 2
    clamped = excess_x <= 0.0 or excess_p <= 0.0
    if clamped:
        _LOGGER.warning('fitted blur below detector resolution, variance clamped to 0')
    var_x = max(0.0, excess_x) / magnification ** 2
    var_p = to_momentum * max(0.0, excess_p)
    err_x = 2.0 * blur_x * image_fit.blur_sigma_err / magnification ** 2
    err_p = to_momentum * 2.0 * blur_p * interference_fit.blur_sigma_err
    return VarianceMeasurement(var_x, var_p, err_x, err_p, label, clamped)


def pulls(recovered, errors, truth):
    """(recovered - truth) / error for arrays of estimates."""
    recovered = np.asarray(recovered, dtype=np.float64)
    errors = np.asarray(errors, dtype=np.float64)
    if np.any(errors <= 0.0):
        raise FitError('pulls need positive errors')
    return (recovered - truth) / errors
