"""Implementation of the main PyEprLab class, which ties the state,
optics, pattern, dataset, fit and criteria modules into one pipeline and
runs the multi-seed Table 1 reproduction.
"""
import logging
from logging import NullHandler
import threading

import numpy as np

from .Const import *
from .Config import ExperimentConfig, ROW_AFTER_STORAGE, ROW_BEFORE_STORAGE, ROW_STR
from .Criteria import classify
from .Dataset import derive_seed, synthesize
from .Error import AcceptanceError, FitError, LabError, StageError
from .Fit import detector_resolution, extract_variances, fit_pattern
from .Node import Node
from .Pattern import (ideal_ghost_image, ideal_ghost_interference, predict_with_oracle,
                      predicted_image, predicted_interference)

_LOGGER = logging.getLogger(__name__)

PUBLISHED_PRODUCTS = {
    ROW_BEFORE_STORAGE : TABLE1_ROW1_PRODUCT,
    ROW_AFTER_STORAGE : TABLE1_ROW2_PRODUCT,
    }


class Trial(object):
    """One seeded pass through the pipeline for one Table 1 row.

    Steps through its stages like a small state machine so a failure can
    be reported with the stage it happened in. Trials share nothing but
    the read-only Lab, so they may run on separate threads.
    """

    STATE_IDLE = 0
    STATE_PREDICT = 1
    STATE_SYNTHESIZE = 2
    STATE_FIT = 3
    STATE_EXTRACT = 4
    STATE_CLASSIFY = 5
    STATE_COMPLETE = 6

    STAGE_NEXT = {
        STATE_IDLE : STATE_PREDICT,
        STATE_PREDICT : STATE_SYNTHESIZE,
        STATE_SYNTHESIZE : STATE_FIT,
        STATE_FIT : STATE_EXTRACT,
        STATE_EXTRACT : STATE_CLASSIFY,
        STATE_CLASSIFY : STATE_COMPLETE,
        }

    STAGE_STR = {
        STATE_IDLE : 'idle',
        STATE_PREDICT : 'predict',
        STATE_SYNTHESIZE : 'synthesize',
        STATE_FIT : 'fit',
        STATE_EXTRACT : 'extract',
        STATE_CLASSIFY : 'classify',
        STATE_COMPLETE : 'complete',
        }

    def __init__(self, lab, row, index, noise=True):
        """Initializes Trial object.

        lab: Lab the trial draws models and settings from.
        row: ROW_BEFORE_STORAGE or ROW_AFTER_STORAGE.
        index: Trial index, part of every derived seed.
        noise: Draw Poisson counts, else rounded expectations (default True).
        """
        self._lab = lab
        self._row = row
        self._index = index
        self._noise = noise
        self._state = self.STATE_IDLE
        self._curves = {}
        self._scans = {}
        self._fits = {}
        self.measurement = None
        self.report = None
        self.error = None

    @property
    def state(self):
        return self._state

    @property
    def row(self):
        return self._row

    @property
    def index(self):
        return self._index

    @property
    def fits(self):
        return dict(self._fits)

    def run(self):
        """Run every stage in order, stopping at the first failure."""
        while self._state != self.STATE_COMPLETE:
            try:
                if self._state == self.STATE_PREDICT:
                    for arm in ARM_STR:
                        self._curves[arm] = self._lab.model(arm, self._row)
                elif self._state == self.STATE_SYNTHESIZE:
                    for arm in ARM_STR:
                        self._scans[arm] = self._lab.synthesize(
                            arm, self._row, self._lab.trial_seed(self._row, self._index),
                            self._noise, self._curves[arm])
                elif self._state == self.STATE_FIT:
                    for arm in ARM_STR:
                        self._fits[arm] = self._lab.fit_scan(self._scans[arm])
                elif self._state == self.STATE_EXTRACT:
                    self.measurement = self._lab.extract(self._fits[ARM_IMAGE],
                                                         self._fits[ARM_INTERFERENCE],
                                                         ROW_STR[self._row])
                elif self._state == self.STATE_CLASSIFY:
                    self.report = classify(self.measurement)
            except LabError as exc:
                stage = self.STAGE_STR[self._state]
                _LOGGER.warning('trial {} row {} failed in {}: {}'.format(
                    self._index, self._row, stage, exc))
                self.error = StageError(stage, str(exc))
                self._state = self.STATE_COMPLETE
                return
            self._state = self.STAGE_NEXT[self._state]
        _LOGGER.debug('trial {} row {} complete'.format(self._index, self._row))


class Lab(Node):
    """This is the main class that runs the numerical experiment.

    |  config: ExperimentConfig, or a configuration dict (default None)
    |  log: [optional] Log file class from logging module
    """

    def __init__(self, config=None, log=None):
        """Initializes Lab object.

        config: ExperimentConfig or configuration dict (default None,
        all defaults).
        log: Logger object to use.
        """
        # Let Node initialize common things
        super().__init__('Lab', 'PyEprLab')
        if isinstance(config, ExperimentConfig):
            self._config = config
        else:
            self._config = ExperimentConfig(config)
        if log is None:
            self.log = logging.getLogger(__name__)
            self.log.addHandler(NullHandler())
        else:
            self.log = log
        self._lock = threading.Lock()
        self._ideal = {}
        self._models = {}

    @property
    def config(self):
        return self._config

    def state(self, row=ROW_BEFORE_STORAGE):
        return self._config.state(row)

    def ideal(self, arm):
        """Ideal curve of an arm on the configured grid, computed once."""
        with self._lock:
            if arm not in self._ideal:
                optics = self._config.optics
                if arm == ARM_IMAGE:
                    curve = ideal_ghost_image(self._config.double_slit, self._config.grid(arm))
                else:
                    curve = ideal_ghost_interference(self._config.double_slit,
                                                     optics.lambda_nm, optics.f2,
                                                     self._config.grid(arm))
                self._ideal[arm] = curve
            return self._ideal[arm]

    def model(self, arm, row=ROW_BEFORE_STORAGE):
        """Blurred prediction of an arm for a row, computed once."""
        key = (arm, row)
        with self._lock:
            cached = self._models.get(key)
        if cached is not None:
            return cached
        state = self.state(row)
        if arm == ARM_IMAGE:
            curve = predicted_image(state, self._config.double_slit, self._config.optics,
                                    self._config.image_detector, self._config.grid(arm))
        else:
            curve = predicted_interference(state, self._config.double_slit,
                                           self._config.optics,
                                           self._config.interference_detector,
                                           self._config.grid(arm))
        with self._lock:
            self._models.setdefault(key, curve)
            return self._models[key]

    def predict(self, arm, row=ROW_BEFORE_STORAGE, oracle=False):
        """Ideal curve, blurred model and, optionally, oracle and gap.

        Returns a dict with keys ideal, model, oracle, gap.
        """
        result = {'ideal': self.ideal(arm), 'model': None, 'oracle': None, 'gap': None}
        if oracle:
            model, oracle_curve, gap = predict_with_oracle(
                self.state(row), self._config.double_slit, self._config.optics,
                self._config.detector(arm), arm, self._config.grid(arm))
            result.update(model=model, oracle=oracle_curve, gap=gap)
        else:
            result['model'] = self.model(arm, row)
        return result

    def trial_seed(self, row, index):
        """Seed of trial index for a row, derived from the root seed."""
        return derive_seed(self._config.seed, row, index)

    def synthesize(self, arm, row=ROW_BEFORE_STORAGE, seed=None, noise=True, curve=None):
        """Synthetic scan of an arm for a row."""
        if seed is None:
            seed = self._config.seed
        if curve is None:
            curve = self.model(arm, row)
        meta = {
            'row': row,
            'state': self.state(row).state_save(),
            'duration_s': self._config.duration(arm, row),
            }
        return synthesize(curve, self._config.budget(arm, row),
                          self._config.scan_positions(arm),
                          derive_seed(seed, arm), self._config.duration(arm, row),
                          noise, meta)

    def fit_scan(self, scan):
        """Fit one scan with the configured ideal pattern."""
        detector = None
        if self._config.fit['detector_in_model']:
            detector = self._config.detector(scan.arm)
        result = fit_pattern(scan, self.ideal(scan.arm), detector)
        if not result.converged:
            raise FitError('{} fit did not converge ({})'.format(scan.arm_str, result.flag))
        return result

    def detector_widths(self):
        """Resolutions subtracted from fitted blurs, zero when in the model."""
        if self._config.fit['detector_in_model']:
            return (0.0, 0.0)
        return (detector_resolution(self._config.image_detector),
                detector_resolution(self._config.interference_detector))

    def extract(self, image_fit, interference_fit, label=None):
        return extract_variances(image_fit, interference_fit, self._config.optics,
                                 self.detector_widths(), label)

    def fit(self, image_scan, interference_scan, label=None):
        """Fit both arms, extract variances and classify them.

        Returns the two FitResults and the CriterionReport, which carries
        the extracted VarianceMeasurement.
        """
        if image_scan.arm != ARM_IMAGE or interference_scan.arm != ARM_INTERFERENCE:
            raise FitError('need one image and one interference scan')
        image_fit = self.fit_scan(image_scan)
        interference_fit = self.fit_scan(interference_scan)
        measurement = self.extract(image_fit, interference_fit, label)
        return image_fit, interference_fit, classify(measurement)

    def run_reproduce(self, seeds=None, noise=None, threads=None):
        """Run the pipeline for both rows over several seeds.

        seeds: Number of seeds (default from config).
        noise: Poisson noise on/off (default from config).
        threads: Worker threads; results do not depend on it (default
        from config).
        Returns a JSON ready summary dict with a 'passed' entry.
        """
        options = self._config.reproduce
        seeds = options['seeds'] if seeds is None else seeds
        noise = options['noise'] if noise is None else noise
        threads = options['threads'] if threads is None else threads
        if seeds < 1 or threads < 1:
            raise StageError('reproduce', 'seeds and threads must be at least 1')
        # Shared read-only models first, so workers only read them
        for row in ROW_STR:
            for arm in ARM_STR:
                try:
                    self.model(arm, row)
                except LabError as exc:
                    raise StageError('predict', str(exc))
        trials = [Trial(self, row, index, noise) for row in ROW_STR for index in range(seeds)]
        for start in range(0, len(trials), threads):
            batch = trials[start:start + threads]
            if threads == 1:
                batch[0].run()
                continue
            workers = [threading.Thread(target=trial.run) for trial in batch]
            for worker in workers:
                worker.start()
            for worker in workers:
                worker.join()
        return self._summarize(trials, options, seeds, noise)

    def _summarize(self, trials, options, seeds, noise):
        rows = {}
        passed = True
        for row in ROW_STR:
            truth = classify(self._config.truth(row))
            done = [trial for trial in trials if trial.row == row and trial.report is not None]
            failed = [trial for trial in trials if trial.row == row and trial.error is not None]
            entry = {
                'label': ROW_STR[row],
                'published_product': PUBLISHED_PRODUCTS[row],
                'truth_product': truth.product,
                'expected_regime': truth.regime_str,
                'trials': [trial.report.state_save() for trial in done],
                'failures': [{'index': trial.index, 'stage': trial.error.stage,
                              'message': str(trial.error)} for trial in failed],
                }
            if done:
                products = [trial.report.product for trial in done]
                entry['median_product'] = float(np.median(products))
                entry['median_var_x_minus_mm2'] = float(np.median(
                    [trial.measurement.var_x_minus for trial in done]))
                entry['median_var_p_plus_per_mm2'] = float(np.median(
                    [trial.measurement.var_p_plus for trial in done]))
                matches = sum(1 for trial in done if trial.report.regime == truth.regime)
                entry['regime_fraction'] = matches / float(seeds)
                deviation = abs(entry['median_product'] - truth.product) / truth.product
                entry['product_deviation'] = deviation
                entry['passed'] = deviation <= options['product_tolerance'] and \
                    entry['regime_fraction'] >= options['regime_fraction']
            else:
                entry['passed'] = False
            passed = passed and entry['passed']
            rows[str(row)] = entry
        summary = {
            'seed': self._config.seed,
            'seeds': seeds,
            'noise': bool(noise),
            'storage_enabled': self._config.storage['enabled'],
            'rows': rows,
            'passed': passed,
            }
        self.log.info('reproduce finished, passed={}'.format(passed))
        return summary

    @staticmethod
    def first_failure(summary):
        """(stage, message) of the first failed trial in a summary, or None."""
        for key in sorted(summary['rows']):
            failures = summary['rows'][key]['failures']
            if failures:
                return failures[0]['stage'], failures[0]['message']
        return None

    @staticmethod
    def check_acceptance(summary):
        """Raise AcceptanceError naming the rows a summary did not pass."""
        failed = [summary['rows'][key]['label'] for key in sorted(summary['rows'])
                  if not summary['rows'][key]['passed']]
        if failed:
            raise AcceptanceError('acceptance failed for: {}'.format(', '.join(failed)))

    @staticmethod
    def summary_table(summary):
        """Plain text table of recovered versus published values."""
        lines = ['{:<24} {:>10} {:>10} {:>10} {:>10} {:>14} {:>8}'.format(
            'row', 'published', 'truth', 'median', 'var_x', 'var_p', 'regime')]
        for key in sorted(summary['rows']):
            entry = summary['rows'][key]
            if 'median_product' in entry:
                lines.append('{:<24} {:>10.3f} {:>10.3f} {:>10.3f} {:>10.3f} {:>14.3f} {:>8.0%}'
                             .format(entry['label'], entry['published_product'],
                                     entry['truth_product'], entry['median_product'],
                                     entry['median_var_x_minus_mm2'],
                                     entry['median_var_p_plus_per_mm2'],
                                     entry['regime_fraction']))
            else:
                lines.append('{:<24} {:>10.3f} {:>10.3f} {:>10}'.format(
                    entry['label'], entry['published_product'], entry['truth_product'], 'failed'))
            lines.append('    expected regime {}, {}'.format(
                entry['expected_regime'], 'PASS' if entry['passed'] else 'FAIL'))
        lines.append('overall: {}'.format('PASS' if summary['passed'] else 'FAIL'))
        return '\n'.join(lines)
