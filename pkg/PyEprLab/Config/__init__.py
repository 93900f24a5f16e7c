"""PyEprLab Config.

JSON experiment configuration with embedded defaults. Every section is
merged key by key over the defaults, except 'state', which replaces the
default state as a whole.
"""
import copy
import json
import logging
import math

from ..Const import *
from ..Criteria import VarianceMeasurement
from ..Dataset import CountBudget, scan_positions
from ..Error import ConfigError, LabError
from ..Node import Node
from ..Optics import DoubleSlitEffective, GaussianPinhole, OpticsConfig, RectSlit
from ..Pattern import make_grid
from ..State import DoubleGaussianState, StorageChannel, apply_storage

_LOGGER = logging.getLogger(__name__)

ROW_BEFORE_STORAGE = 1
ROW_AFTER_STORAGE = 2

ROW_STR = {
    ROW_BEFORE_STORAGE : TABLE1_ROW1_LABEL,
    ROW_AFTER_STORAGE : TABLE1_ROW2_LABEL,
    }

DEFAULTS = {
    'state' : {
        'var_x_minus_mm2' : TABLE1_ROW1_VAR_X_MINUS,
        'var_p_plus_per_mm2' : TABLE1_ROW1_VAR_P_PLUS,
        'dimension' : 1,
        },
    'storage' : {
        'enabled' : True,
        'beta_x_mm2' : round(TABLE1_ROW2_VAR_X_MINUS - TABLE1_ROW1_VAR_X_MINUS, 12),
        'beta_p_per_mm2' : round(TABLE1_ROW2_VAR_P_PLUS - TABLE1_ROW1_VAR_P_PLUS, 12),
        'efficiency' : STORAGE_EFFICIENCY,
        },
    'optics' : {
        'lambda_nm' : WAVELENGTH_NM,
        'f1_mm' : F1_MM,
        'f2_mm' : F2_MM,
        'fc_mm' : FC_MM,
        'magnification_imaging_arm' : MAGNIFICATION_IMAGING_ARM,
        },
    'apertures' : {
        'bar_width_mm' : BAR_WIDTH_MM,
        'mode_waist_mm' : MODE_WAIST_MM,
        'slit_width_mm' : SLIT_WIDTH_MM,
        'fiber_waist_mm' : FIBER_WAIST_MM,
        },
    'budgets' : {
        'image_peak' : IMAGE_PEAK_COUNTS,
        'interference_peak' : INTERFERENCE_PEAK_COUNTS,
        'image_peak_stored' : IMAGE_PEAK_COUNTS_STORED,
        'interference_peak_stored' : INTERFERENCE_PEAK_COUNTS_STORED,
        'image_duration_s' : IMAGE_DURATION_S,
        'interference_duration_s' : INTERFERENCE_DURATION_S,
        'image_duration_s_stored' : IMAGE_DURATION_S_STORED,
        'interference_duration_s_stored' : INTERFERENCE_DURATION_S_STORED,
        'snr' : SIGNAL_TO_NOISE,
        },
    'scans' : {
        'image_step_mm' : IMAGE_STEP_MM,
        'image_half_range_mm' : IMAGE_SCAN_HALF_RANGE_MM,
        'interference_step_mm' : INTERFERENCE_STEP_MM,
        'interference_half_range_mm' : INTERFERENCE_SCAN_HALF_RANGE_MM,
        'image_grid_half_width_mm' : IMAGE_GRID_HALF_WIDTH_MM,
        'interference_grid_half_width_mm' : INTERFERENCE_GRID_HALF_WIDTH_MM,
        'grid_points' : GRID_POINTS,
        },
    'fit' : {
        'detector_in_model' : True,
        },
    'reproduce' : {
        'seeds' : 10,
        'threads' : 1,
        'noise' : True,
        'product_tolerance' : 0.25,
        'regime_fraction' : 0.9,
        },
    'seed' : DEFAULT_SEED,
    }

# Keys that may be null
NULLABLE = {
    ('optics', 'magnification_imaging_arm'),
    ('budgets', 'image_peak_stored'),
    ('budgets', 'interference_peak_stored'),
    }

# Alternative spellings of the state section
STATE_FORMS = (
    ('var_x_minus_mm2', 'var_p_plus_per_mm2'),
    ('sigma_minus_mm', 'sigma_plus_mm'),
    )
STATE_EXTRA_KEYS = ('dimension', 'description')


def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _check_value(section, key, value, default):
    if value is None and (section, key) in NULLABLE:
        return
    if isinstance(default, bool) or key == 'enabled':
        if not isinstance(value, bool):
            raise ConfigError('{}.{} must be true or false, got {!r}'.format(section, key, value))
    elif _is_number(default) or (section, key) in NULLABLE:
        if not _is_number(value) or not math.isfinite(value):
            raise ConfigError('{}.{} must be a finite number, got {!r}'.format(section, key, value))
        if isinstance(default, int) and not isinstance(value, int):
            raise ConfigError('{}.{} must be an integer, got {!r}'.format(section, key, value))


def _resolve_state(section):
    if not isinstance(section, dict):
        raise ConfigError('state must be an object, got {!r}'.format(section))
    forms = [form for form in STATE_FORMS if any(key in section for key in form)]
    if len(forms) != 1 or not all(key in section for key in forms[0]):
        raise ConfigError('state needs exactly one of {} or {}'.format(*STATE_FORMS))
    for key in section:
        if key not in forms[0] and key not in STATE_EXTRA_KEYS:
            raise ConfigError('unknown key state.{}'.format(key))
        if key in forms[0]:
            _check_value('state', key, section[key], 0.0)
    resolved = dict(section)
    resolved.setdefault('dimension', 1)
    if resolved['dimension'] not in (1, 2) or isinstance(resolved['dimension'], bool):
        raise ConfigError('state.dimension must be 1 or 2, got {!r}'.format(resolved['dimension']))
    return resolved


def resolve(document):
    """Merge a configuration document over the defaults, rejecting unknown keys."""
    if not isinstance(document, dict):
        raise ConfigError('configuration must be a JSON object')
    resolved = copy.deepcopy(DEFAULTS)
    for section, value in document.items():
        if section not in DEFAULTS:
            raise ConfigError('unknown configuration section {!r}'.format(section))
        if section == 'seed':
            if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < 2 ** 64:
                raise ConfigError('seed must be a non-negative 64-bit integer, got {!r}'.format(value))
            resolved['seed'] = value
        elif section == 'state':
            resolved['state'] = _resolve_state(value)
        else:
            if not isinstance(value, dict):
                raise ConfigError('section {} must be an object'.format(section))
            for key, item in value.items():
                if key not in DEFAULTS[section]:
                    raise ConfigError('unknown key {}.{}'.format(section, key))
                _check_value(section, key, item, DEFAULTS[section][key])
                resolved[section][key] = item
    return resolved


class ExperimentConfig(Node):
    """Resolved experiment configuration and the objects built from it."""

    def __init__(self, document=None, description=None):
        """Initializes ExperimentConfig object.

        document: Parsed JSON configuration, partial sections allowed
        (default None, all defaults).
        """
        # Let Node initialize common things
        super().__init__('ExperimentConfig', description)
        self._document = resolve(document or {})
        # Build everything once so bad values fail at load time
        try:
            self._state = self._build_state()
            self._channel = self._build_channel()
            self._optics = self._build_optics()
            self._double_slit = DoubleSlitEffective(self.apertures['bar_width_mm'],
                                                    self.apertures['mode_waist_mm'],
                                                    'effective double slit')
            self._slit = RectSlit(self.apertures['slit_width_mm'], 'detection slit')
            self._fiber = GaussianPinhole(self.apertures['fiber_waist_mm'], 'fiber head')
            self._stored_state = apply_storage(self._state, self._channel) \
                if self.storage['enabled'] else self._state
            for arm in ARM_STR:
                self.scan_positions(arm)
                self.grid(arm)
                for row in ROW_STR:
                    self.budget(arm, row)
                    self.duration(arm, row)
            self._check_reproduce()
        except ConfigError:
            raise
        except LabError as exc:
            raise ConfigError(str(exc))

    @classmethod
    def load(cls, path):
        """Read a JSON configuration file; I/O errors propagate as OSError."""
        with open(path) as handle:
            try:
                document = json.load(handle)
            except ValueError as exc:
                raise ConfigError('{}: {}'.format(path, exc))
        _LOGGER.debug('loaded configuration from {}'.format(path))
        return cls(document, path)

    def save(self, path):
        """Write the fully resolved configuration with sorted keys."""
        with open(path, 'w') as handle:
            handle.write(self.dumps())

    def dumps(self):
        return json.dumps(self._document, sort_keys=True, indent=2) + '\n'

    def state_save(self):
        return copy.deepcopy(self._document)

    @classmethod
    def state_load(cls, state):
        return cls(state)

    def with_overrides(self, **sections):
        """New configuration with some sections merged in."""
        document = copy.deepcopy(self._document)
        for section, value in sections.items():
            if isinstance(value, dict) and section != 'state':
                document.setdefault(section, {}).update(value)
            else:
                document[section] = value
        return ExperimentConfig(document, self._description)

    def _section(self, name):
        return dict(self._document[name])

    @property
    def storage(self):
        return self._section('storage')

    @property
    def apertures(self):
        return self._section('apertures')

    @property
    def budgets(self):
        return self._section('budgets')

    @property
    def scans(self):
        return self._section('scans')

    @property
    def fit(self):
        return self._section('fit')

    @property
    def reproduce(self):
        return self._section('reproduce')

    @property
    def seed(self):
        return self._document['seed']

    def _build_state(self):
        section = self._document['state']
        if 'sigma_minus_mm' in section:
            return DoubleGaussianState(section['sigma_minus_mm'], section['sigma_plus_mm'],
                                       section['dimension'],
                                       section.get('description', TABLE1_ROW1_LABEL))
        return DoubleGaussianState.from_variances(section['var_x_minus_mm2'],
                                                  section['var_p_plus_per_mm2'],
                                                  section['dimension'],
                                                  section.get('description', TABLE1_ROW1_LABEL))

    def _build_channel(self):
        section = self._document['storage']
        return StorageChannel(section['beta_x_mm2'], section['beta_p_per_mm2'],
                              section['efficiency'], 'storage')

    def _build_optics(self):
        section = self._document['optics']
        return OpticsConfig(section['lambda_nm'], section['f1_mm'], section['f2_mm'],
                            section['fc_mm'], section['magnification_imaging_arm'])

    def _check_reproduce(self):
        section = self._document['reproduce']
        if section['seeds'] < 1 or section['threads'] < 1:
            raise ConfigError('reproduce.seeds and reproduce.threads must be at least 1')
        if not 0.0 < section['product_tolerance'] or not 0.0 < section['regime_fraction'] <= 1.0:
            raise ConfigError('reproduce tolerances out of range')
        if self._document['scans']['grid_points'] < 16:
            raise ConfigError('scans.grid_points must be at least 16')

    def state(self, row=ROW_BEFORE_STORAGE):
        """DoubleGaussianState of a Table 1 row (1 before, 2 after storage)."""
        if row == ROW_BEFORE_STORAGE:
            return self._state
        if row == ROW_AFTER_STORAGE:
            return self._stored_state
        raise ConfigError('unknown row {!r}'.format(row))

    def truth(self, row=ROW_BEFORE_STORAGE):
        """Exact variances of the configured state for a row."""
        return VarianceMeasurement.from_state(self.state(row), ROW_STR[row])

    @property
    def storage_channel(self):
        return self._channel

    @property
    def optics(self):
        return self._optics

    @property
    def double_slit(self):
        return self._double_slit

    @property
    def image_detector(self):
        return self._slit

    @property
    def interference_detector(self):
        return self._fiber

    def detector(self, arm):
        if arm == ARM_IMAGE:
            return self._slit
        return self._fiber

    def budget(self, arm, row=ROW_BEFORE_STORAGE):
        """CountBudget for an arm and row.

        A null stored peak is derived from the unstored one, the storage
        efficiency and the ratio of accumulation times.
        """
        section = self._document['budgets']
        name = ARM_STR[arm]
        peak = section[name + '_peak']
        if row == ROW_AFTER_STORAGE:
            stored = section[name + '_peak_stored']
            if stored is None:
                factor = self.duration(arm, row) / self.duration(arm, ROW_BEFORE_STORAGE)
                return CountBudget.from_snr(peak, section['snr']).attenuated(
                    self._document['storage']['efficiency'], factor)
            peak = stored
        return CountBudget.from_snr(peak, section['snr'])

    def duration(self, arm, row=ROW_BEFORE_STORAGE):
        """Accumulation time per scan point (s)."""
        key = ARM_STR[arm] + '_duration_s'
        if row == ROW_AFTER_STORAGE:
            key += '_stored'
        value = self._document['budgets'][key]
        if not value > 0.0:
            raise ConfigError('budgets.{} must be positive'.format(key))
        return float(value)

    def scan_positions(self, arm):
        """Scan positions (mm) of an arm."""
        section = self._document['scans']
        name = ARM_STR[arm]
        return scan_positions(section[name + '_half_range_mm'], section[name + '_step_mm'])

    def grid(self, arm):
        """Model grid (mm) of an arm."""
        section = self._document['scans']
        half_width = section[ARM_STR[arm] + '_grid_half_width_mm']
        if half_width < section[ARM_STR[arm] + '_half_range_mm']:
            raise ConfigError('{} grid narrower than its scan'.format(ARM_STR[arm]))
        return make_grid(half_width, section['grid_points'])
