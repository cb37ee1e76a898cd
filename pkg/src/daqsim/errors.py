"""Exception hierarchy shared by all daqsim modules.

Exit-code mapping for the CLI lives in `daqsim.cli`: configuration and
argument problems exit with 2, numerical failures with 3, resource caps
with 4.
"""


class DaqsimError(Exception):
    """Base class for all errors raised by this package."""


class ArgumentError(DaqsimError, ValueError):
    """A caller-supplied value violates a documented precondition."""


class ConfigError(DaqsimError):
    """A config file could not be parsed or fails validation."""


class StabilityError(DaqsimError):
    """The ion crystal is transversally unstable (zigzag regime)."""

    def __init__(self, message, axis=None):
        super().__init__(message)
        self.axis = axis


class ConvergenceError(DaqsimError):
    """An iterative solver failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ResourceCapError(DaqsimError):
    """A requested computation exceeds the configured memory cap."""
