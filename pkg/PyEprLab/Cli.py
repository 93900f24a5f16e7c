"""Command line interface: predict | synthesize | fit | criteria | reproduce.

Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 fit
non-convergence, 4 acceptance failure, 5 other stage failure.
"""
import argparse
import json
import logging
import os
import sys

from .Const import *
from .Config import ROW_AFTER_STORAGE, ROW_BEFORE_STORAGE, ExperimentConfig
from .Criteria import VarianceMeasurement, classify
from .Dataset import CoincidenceScan
from .Error import AcceptanceError, ConfigError, FitError, LabError, StageError
from .Lab import Lab

_LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_FIT = 3
EXIT_ACCEPTANCE = 4
EXIT_STAGE = 5


def _write_json(path, document):
    text = json.dumps(document, sort_keys=True, indent=2) + '\n'
    if path is None or path == '-':
        sys.stdout.write(text)
    else:
        with open(path, 'w') as handle:
            handle.write(text)


def _sibling(path, suffix):
    root, extension = os.path.splitext(path)
    return root + suffix + (extension or '.csv')


def _load_config(args):
    if args.config is None:
        config = ExperimentConfig()
    else:
        config = ExperimentConfig.load(args.config)
    if getattr(args, 'seed', None) is not None:
        config = config.with_overrides(seed=args.seed)
    if getattr(args, 'storage_off', False):
        config = config.with_overrides(storage={'enabled': False})
    return config


def cmd_predict(args):
    """Write the ideal curve, the blurred model and, if asked, the oracle."""
    lab = Lab(_load_config(args))
    arm = ARM_FROM_STR[args.arm]
    result = lab.predict(arm, args.row, oracle=args.oracle)
    result['ideal'].to_csv(args.output)
    result['model'].to_csv(_sibling(args.output, '_model'))
    if args.oracle:
        result['oracle'].to_csv(_sibling(args.output, '_oracle'))
        sys.stdout.write('{} model vs oracle sup-norm gap: {:.4f}\n'.format(args.arm, result['gap']))
        if not result['oracle'].converged:
            _LOGGER.warning('oracle quadrature did not converge')
    return EXIT_OK


def cmd_synthesize(args):
    """Write a synthetic coincidence scan and its sidecar."""
    config = _load_config(args)
    lab = Lab(config)
    scan = lab.synthesize(ARM_FROM_STR[args.arm], args.row, config.seed, not args.no_noise)
    scan.write(args.output)
    return EXIT_OK


def cmd_fit(args):
    """Fit one or two scans; two scans also yield variances and a report."""
    lab = Lab(_load_config(args))
    scans = [CoincidenceScan.read(path) for path in args.datasets]
    if len(scans) == 1:
        fit = lab.fit_scan(scans[0])
        _write_json(args.output, {'fits': {ARM_STR[fit.arm]: fit.state_save()}})
        return EXIT_OK
    scans.sort(key=lambda scan: scan.arm)
    image_fit, interference_fit, report = lab.fit(scans[0], scans[1], args.label)
    document = {
        'fits': {ARM_STR[fit.arm]: fit.state_save() for fit in (image_fit, interference_fit)},
        'measurement': report.measurement.state_save(),
        'report': report.state_save(),
        }
    _write_json(args.output, document)
    return EXIT_OK


def cmd_criteria(args):
    """Classify a measurement JSON document."""
    with open(args.measurement) as handle:
        try:
            document = json.load(handle)
        except ValueError as exc:
            raise ConfigError('{}: {}'.format(args.measurement, exc))
    if 'measurement' in document:
        document = document['measurement']
    report = classify(VarianceMeasurement.state_load(document))
    _write_json(args.output, report.state_save())
    return EXIT_OK


def cmd_reproduce(args):
    """Run the multi-seed pipeline and check acceptance."""
    lab = Lab(_load_config(args))
    noise = False if args.no_noise else None
    summary = lab.run_reproduce(args.seeds, noise, args.threads)
    sys.stdout.write(Lab.summary_table(summary) + '\n')
    if args.output:
        _write_json(args.output, summary)
    failure = Lab.first_failure(summary)
    if failure is not None:
        stage, message = failure
        sys.stderr.write('{}\n'.format(message))
        if stage == 'fit':
            return EXIT_FIT
        return EXIT_STAGE
    Lab.check_acceptance(summary)
    return EXIT_OK


def _add_config(parser):
    parser.add_argument('--config', help='JSON configuration file (defaults built in)')


def _add_arm(parser):
    parser.add_argument('--arm', choices=sorted(ARM_FROM_STR), default='image')
    parser.add_argument('--row', type=int, choices=(ROW_BEFORE_STORAGE, ROW_AFTER_STORAGE),
                        default=ROW_BEFORE_STORAGE,
                        help='1 before storage, 2 after storage')


def build_parser():
    parser = argparse.ArgumentParser(prog='pyeprlab',
                                     description='Numerical EPR position-momentum lab')
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='-v for info, -vv for debug logging')
    commands = parser.add_subparsers(dest='command')
    commands.required = True

    predict = commands.add_parser('predict', help='write predicted pattern CSVs')
    _add_config(predict)
    _add_arm(predict)
    predict.add_argument('--oracle', action='store_true', help='also write the amplitude oracle')
    predict.add_argument('--output', required=True)
    predict.set_defaults(handler=cmd_predict)

    synth = commands.add_parser('synthesize', help='write a synthetic coincidence scan')
    _add_config(synth)
    _add_arm(synth)
    synth.add_argument('--seed', type=int)
    synth.add_argument('--no-noise', action='store_true')
    synth.add_argument('--output', required=True)
    synth.set_defaults(handler=cmd_synthesize)

    fit = commands.add_parser('fit', help='fit scans and extract variances')
    _add_config(fit)
    fit.add_argument('datasets', nargs='+', help='scan CSV files (image and/or interference)')
    fit.add_argument('--label')
    fit.add_argument('--output', default='-')
    fit.set_defaults(handler=cmd_fit)

    criteria = commands.add_parser('criteria', help='classify a measurement JSON')
    criteria.add_argument('measurement')
    criteria.add_argument('--output', default='-')
    criteria.set_defaults(handler=cmd_criteria)

    reproduce = commands.add_parser('reproduce', help='multi-seed Table 1 reproduction')
    _add_config(reproduce)
    reproduce.add_argument('--seeds', type=int)
    reproduce.add_argument('--seed', type=int)
    reproduce.add_argument('--threads', type=int)
    reproduce.add_argument('--no-noise', action='store_true')
    reproduce.add_argument('--storage-off', action='store_true')
    reproduce.add_argument('--output', help='summary JSON file')
    reproduce.set_defaults(handler=cmd_reproduce)
    return parser


def main(argv=None):
    """Parse arguments, run one command and return its exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose > 1:
        level = logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level)
    if getattr(args, 'datasets', None) is not None and len(args.datasets) > 2:
        parser.error('fit takes one or two scans')
    try:
        return args.handler(args)
    except ConfigError as exc:
        _LOGGER.error('configuration error: {}'.format(exc))
        return EXIT_CONFIG
    except FitError as exc:
        _LOGGER.error('fit failed: {}'.format(exc))
        return EXIT_FIT
    except AcceptanceError as exc:
        _LOGGER.error(str(exc))
        return EXIT_ACCEPTANCE
    except StageError as exc:
        _LOGGER.error(str(exc))
        return EXIT_STAGE
    except LabError as exc:
        _LOGGER.error('{} failed: {}'.format(args.command, exc))
        return EXIT_STAGE
    except OSError as exc:
        _LOGGER.error('I/O error: {}'.format(exc))
        return EXIT_IO


if __name__ == '__main__':
    sys.exit(main())
