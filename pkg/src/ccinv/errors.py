"""Exception types shared across the toolkit.

Numerical trouble is reported, never silently patched: a caller that sees
one of these knows the run parameters have to change (wider grid, denser
momentum table, different bound-state hypothesis, ...).
"""


class CcinvError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(CcinvError):
    """Invalid run configuration, command line, or input file."""


class NumericalError(CcinvError):
    """A solver produced an unusable result."""


class IntegrationOverflowError(NumericalError):
    """Wavefunction integration grew beyond the overflow guard."""

    def __init__(self, message, channel=None, growth=None):
        super().__init__(message)
        self.channel = channel
        self.growth = growth


class ThresholdGridError(CcinvError):
    """Momentum table too sparse inside a threshold substitution window."""

    def __init__(self, message, channel=None, n_points=None):
        super().__init__(message)
        self.channel = channel
        self.n_points = n_points


class BoundStateScanError(NumericalError):
    """Bound-state search hit a window boundary or an unresolved root."""


class FitRejectedError(CcinvError):
    """Exponential fit residual failed the acceptance gate."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InconsistentDataError(NumericalError):
    """Input data violate a structural requirement (symmetry, reality, ...)."""


class ToleranceFailure(CcinvError):
    """A round-trip comparison exceeded its configured tolerance."""
