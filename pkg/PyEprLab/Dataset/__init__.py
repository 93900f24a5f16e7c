"""PyEprLab Dataset.

Synthetic coincidence scans: Poisson counts over a flat accidental floor
drawn from a predicted curve, plus a phase-space Monte Carlo of the
imaging channel. Every random draw comes from a generator seeded by
(root seed, point or chunk index), so results do not depend on the
order in which points or chunks are produced.
"""
import csv
import json
import logging
import math
import os

import numpy as np

from ..Const import *
from ..Error import DatasetError, PatternError
from ..Node import Node
from ..Optics import Open, RectSlit

_LOGGER = logging.getLogger(__name__)

SEED_MAX = 2 ** 64


def _seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise DatasetError('seed must be an integer, got {!r}'.format(seed))
    seed = int(seed)
    if not 0 <= seed < SEED_MAX:
        raise DatasetError('seed must fit in 64 unsigned bits, got {!r}'.format(seed))
    return seed


def derive_seed(root, *keys):
    """Stable 64-bit seed derived from a root seed and integer keys."""
    entropy = [_seed(root)] + [_seed(key) for key in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0])


class CountBudget(Node):
    """Expected peak coincidences and the accidental floor of a scan."""

    def __init__(self, peak_expected, background_fraction=1.0 / SIGNAL_TO_NOISE,
                 description=None):
        """Initializes CountBudget object.

        peak_expected: Expected counts at the pattern maximum.
        background_fraction: Accidental floor over peak, in [0, 1)
        (default 1/30).
        """
        # Let Node initialize common things
        super().__init__('CountBudget', description)
        try:
            self._peak_expected = float(peak_expected)
            self._background_fraction = float(background_fraction)
        except (TypeError, ValueError):
            raise DatasetError('count budget entries must be numbers')
        if not math.isfinite(self._peak_expected) or self._peak_expected <= 0.0:
            raise DatasetError('peak_expected must be positive, got {!r}'.format(peak_expected))
        if not 0.0 <= self._background_fraction < 1.0:
            raise DatasetError('background_fraction must lie in [0, 1), got {!r}'
                               .format(background_fraction))

    @classmethod
    def from_snr(cls, peak_expected, snr=SIGNAL_TO_NOISE):
        """Budget whose floor is peak / snr."""
        if not snr > 1.0:
            raise DatasetError('signal to noise ratio must exceed 1, got {!r}'.format(snr))
        return cls(peak_expected, 1.0 / snr)

    @property
    def peak_expected(self):
        return self._peak_expected

    @property
    def background_fraction(self):
        return self._background_fraction

    @property
    def background(self):
        """Returns the expected accidental counts per point."""
        return self._background_fraction * self._peak_expected

    def attenuated(self, efficiency, duration_factor=1.0):
        """Budget after a lossy stage integrated for duration_factor as long."""
        if not (0.0 < efficiency <= 1.0) or not duration_factor > 0.0:
            raise DatasetError('efficiency must lie in (0, 1] and duration_factor be positive')
        return CountBudget(self._peak_expected * efficiency * duration_factor,
                           self._background_fraction)

    def state_save(self):
        state = super().state_save()
        state['peak_expected'] = self._peak_expected
        state['background_fraction'] = self._background_fraction
        return state

    @classmethod
    def state_load(cls, state):
        return cls(state['peak_expected'], state['background_fraction'],
                   state.get('description'))


class CoincidenceScan(Node):
    """Represents counted coincidences along one scan."""

    def __init__(self, arm, positions, counts, duration_s, seed, meta=None,
                 description=None):
        """Initializes CoincidenceScan object.

        arm: ARM_IMAGE or ARM_INTERFERENCE.
        positions: Strictly increasing scan positions in mm.
        counts: Non-negative integer counts, one per position.
        duration_s: Accumulation time per point in seconds.
        seed: Root seed the counts were drawn with.
        meta: JSON ready dict describing how the scan was produced.
        """
        # Let Node initialize common things
        super().__init__('CoincidenceScan', description)
        if arm not in ARM_STR:
            raise DatasetError('unknown arm {!r}'.format(arm))
        positions = np.array(positions, dtype=np.float64)
        counts = np.asarray(counts)
        if positions.ndim != 1 or counts.shape != positions.shape or positions.size == 0:
            raise DatasetError('positions and counts must be matching 1-D sequences')
        if not np.all(np.isfinite(positions)) or np.any(np.diff(positions) <= 0.0):
            raise DatasetError('scan positions must be finite and strictly increasing')
        if counts.dtype.kind not in 'iu':
            rounded = np.rint(counts)
            if not np.all(rounded == counts):
                raise DatasetError('counts must be integers')
            counts = rounded
        counts = counts.astype(np.int64)
        if np.any(counts < 0):
            raise DatasetError('counts must be non-negative')
        try:
            duration_s = float(duration_s)
        except (TypeError, ValueError):
            raise DatasetError('duration_s must be a number, got {!r}'.format(duration_s))
        if not duration_s > 0.0:
            raise DatasetError('duration_s must be positive, got {!r}'.format(duration_s))
        positions.flags.writeable = False
        counts.flags.writeable = False
        self._arm = arm
        self._positions = positions
        self._counts = counts
        self._duration_s = duration_s
        self._seed = _seed(seed)
        self._meta = dict(meta or {})

    @property
    def arm(self):
        return self._arm

    @property
    def arm_str(self):
        return ARM_STR[self._arm]

    @property
    def positions(self):
        return self._positions

    @property
    def counts(self):
        return self._counts

    @property
    def duration_s(self):
        return self._duration_s

    @property
    def seed(self):
        return self._seed

    @property
    def meta(self):
        return dict(self._meta)

    def __len__(self):
        return self._positions.size

    def shifted(self, offset):
        """Same counts at positions moved by offset (mm)."""
        return CoincidenceScan(self._arm, self._positions + offset, self._counts,
                               self._duration_s, self._seed, self._meta, self._description)

    @staticmethod
    def sidecar_path(path):
        """JSON sidecar holding seed and meta next to a scan CSV."""
        root, _ = os.path.splitext(path)
        return root + '.json'

    def write(self, path):
        """Write position_mm,counts,duration_s CSV plus the JSON sidecar."""
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow(['position_mm', 'counts', 'duration_s'])
            for position, count in zip(self._positions, self._counts):
                writer.writerow([repr(float(position)), int(count), repr(self._duration_s)])
        sidecar = {'arm': self.arm_str, 'seed': self._seed, 'meta': self._meta}
        with open(self.sidecar_path(path), 'w') as handle:
            json.dump(sidecar, handle, sort_keys=True, indent=2)
            handle.write('\n')
        _LOGGER.debug('wrote {} scan with {} points to {}'.format(
            self.arm_str, self._positions.size, path))

    @classmethod
    def read(cls, path, arm=None):
        """Read a scan CSV; the sidecar is optional for external scans.

        arm: Arm to assume when no sidecar exists (default None).
        """
        positions = []
        counts = []
        durations = []
        with open(path, newline='') as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames != ['position_mm', 'counts', 'duration_s']:
                raise DatasetError('{}: expected columns position_mm,counts,duration_s'
                                   .format(path))
            for row in reader:
                try:
                    positions.append(float(row['position_mm']))
                    counts.append(int(row['counts']))
                    durations.append(float(row['duration_s']))
                except (TypeError, ValueError):
                    raise DatasetError('{}: malformed row {!r}'.format(path, row))
        if not durations or len(set(durations)) != 1:
            raise DatasetError('{}: duration_s must be one value for the whole scan'
                               .format(path))
        seed = 0
        meta = {}
        sidecar = cls.sidecar_path(path)
        if os.path.exists(sidecar):
            with open(sidecar) as handle:
                try:
                    document = json.load(handle)
                except ValueError as exc:
                    raise DatasetError('{}: {}'.format(sidecar, exc))
            seed = document.get('seed', 0)
            meta = document.get('meta', {})
            if 'arm' in document:
                if document['arm'] not in ARM_FROM_STR:
                    raise DatasetError('{}: unknown arm {!r}'.format(sidecar, document['arm']))
                arm = ARM_FROM_STR[document['arm']]
        if arm is None:
            raise DatasetError('{}: arm unknown, no sidecar found'.format(path))
        return cls(arm, positions, counts, durations[0], seed, meta)

    def state_save(self):
        state = super().state_save()
        state['arm'] = self.arm_str
        state['positions_mm'] = self._positions.tolist()
        state['counts'] = self._counts.tolist()
        state['duration_s'] = self._duration_s
        state['seed'] = self._seed
        state['meta'] = self._meta
        return state

    @classmethod
    def state_load(cls, state):
        return cls(ARM_FROM_STR[state['arm']], state['positions_mm'], state['counts'],
                   state['duration_s'], state['seed'], state.get('meta'),
                   state.get('description'))


def scan_positions(half_range, step):
    """Symmetric scan positions -half_range .. half_range in steps."""
    if not step > 0.0 or not half_range > 0.0:
        raise DatasetError('scan step and half range must be positive')
    count = int(round(half_range / step))
    return np.arange(-count, count + 1) * step


def synthesize(curve, budget, positions, seed, duration_s=1.0, noise=True, meta=None):
    """Draw Poisson coincidences from a predicted curve.

    curve: PatternCurve, max-normalized, covering positions.
    budget: CountBudget fixing peak counts and the flat floor.
    positions: Scan positions in mm.
    seed: Root seed; point i uses a generator seeded with (seed, i).
    duration_s: Accumulation time per point (default 1).
    noise: False returns the rounded expected counts instead (default True).
    meta: Extra entries merged into the scan meta (default None).
    """
    seed = _seed(seed)
    positions = np.asarray(positions, dtype=np.float64)
    try:
        shape = curve.value_at(positions)
    except PatternError as exc:
        raise DatasetError(str(exc))
    expected = budget.background + budget.peak_expected * shape
    if noise:
        counts = np.empty(positions.size, dtype=np.int64)
        for index, mean in enumerate(expected):
            counts[index] = np.random.default_rng([seed, index]).poisson(mean)
    else:
        counts = np.rint(expected).astype(np.int64)
    record = {
        'budget': budget.state_save(),
        'background_model': 'flat',
        'noise': bool(noise),
        'curve': curve.description_pretty('curve'),
        }
    record.update(meta or {})
    _LOGGER.debug('synthesize: {} points, seed {}, total {} counts'.format(
        positions.size, seed, int(counts.sum())))
    return CoincidenceScan(curve.kind, positions, counts, duration_s, seed, record)


def _require_line_state(state):
    if state.dimension != 1:
        raise DatasetError('phase-space sampling needs a one-dimensional state')


def _sample_chunk(state, size, rng):
    """(x1, p1, x2, p2) rows from the Wigner function of the state."""
    u = rng.normal(0.0, state.sigma_minus, size)
    v = rng.normal(0.0, state.sigma_plus, size)
    s = rng.normal(0.0, 1.0 / state.sigma_plus, size)
    d = rng.normal(0.0, 1.0 / state.sigma_minus, size)
    return np.column_stack(((v + u) / 2.0, (s + d) / 2.0, (v - u) / 2.0, (s - d) / 2.0))


def _chunks(n):
    for index, start in enumerate(range(0, n, MC_CHUNK_SIZE)):
        yield index, min(MC_CHUNK_SIZE, n - start)


def _sample_count(n):
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise DatasetError('sample count must be a positive integer, got {!r}'.format(n))
    return int(n)


def wigner_sample(state, n, seed):
    """Draw n phase-space points (x1, p1, x2, p2) of the state.

    Collective coordinates are independent Gaussians: x1 - x2 with width
    sigma_minus, x1 + x2 with sigma_plus, p1 + p2 with 1 / sigma_plus and
    p1 - p2 with 1 / sigma_minus. Returns an (n, 4) array.
    """
    _require_line_state(state)
    n = _sample_count(n)
    seed = _seed(seed)
    parts = [_sample_chunk(state, size, np.random.default_rng([seed, index]))
             for index, size in _chunks(n)]
    return np.concatenate(parts)


def mc_ghost_image(state, aperture, detector, positions, n, seed, magnification=1.0,
                   duration_s=1.0):
    """Ray-level ghost image: gate on arm 2, histogram arm 1.

    Each sampled pair is kept with probability |T(x2)|^2 and counted at
    every scan position X with |x1 M - X| < w/2 for a slit of width w.
    The estimate is incoherent, so it carries no fringes.
    """
    _require_line_state(state)
    n = _sample_count(n)
    seed = _seed(seed)
    if isinstance(detector, RectSlit):
        half = detector.width / 2.0
    elif detector is None or isinstance(detector, Open):
        half = math.inf
    else:
        raise DatasetError('Monte Carlo binning needs a RectSlit or Open detector')
    positions = np.asarray(positions, dtype=np.float64)
    counts = np.zeros(positions.size, dtype=np.int64)
    accepted = 0
    for index, size in _chunks(n):
        rng = np.random.default_rng([seed, index])
        sample = _sample_chunk(state, size, rng)
        keep = rng.random(size) < np.abs(aperture.transmission(sample[:, 2])) ** 2
        arm1 = np.sort(sample[keep, 0] * magnification)
        accepted += arm1.size
        upper = np.searchsorted(arm1, positions + half, side='left')
        lower = np.searchsorted(arm1, positions - half, side='right')
        counts += upper - lower
    _LOGGER.debug('mc_ghost_image: {} of {} pairs gated'.format(accepted, n))
    meta = {
        'source': 'mc_ghost_image',
        'pairs': n,
        'gated': accepted,
        'state': state.state_save(),
        'aperture': aperture.state_save(),
        'magnification': magnification,
        }
    return CoincidenceScan(ARM_IMAGE, positions, counts, duration_s, seed, meta)
