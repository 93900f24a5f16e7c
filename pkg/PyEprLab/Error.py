"""PyEprLab exceptions.

Everything derives from ValueError so callers that only know about
bad values can still catch them.
"""


class LabError(ValueError):
    """Base class for PyEprLab errors."""


class StateError(LabError):
    """Invalid state, channel or wavefunction argument."""


class ApertureError(LabError):
    """Invalid aperture or optical element."""


class PatternError(LabError):
    """Grid, window or blur outside of what a pattern can represent."""


class QuadratureError(PatternError):
    """Quadrature did not converge on grid doubling."""


class DatasetError(LabError):
    """Invalid scan, budget or sampling request."""


class FitError(LabError):
    """Fit could not be set up or extracted."""


class ConfigError(LabError):
    """Malformed configuration document."""


class StageError(LabError):
    """A pipeline stage failed."""

    def __init__(self, stage, message):
        super().__init__('{} stage failed: {}'.format(stage, message))
        self.stage = stage


class AcceptanceError(LabError):
    """Reproduction did not meet the acceptance tolerances."""
