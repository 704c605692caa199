"""Exception types shared across the package.

Plain ``ValueError`` is used for caller mistakes (bad arguments). The classes
below separate failures that need distinct handling at the CLI boundary:
config problems exit with code 2, data problems with code 3, anything else
with code 4.
"""


class ConfigError(RuntimeError):
    """Invalid or inconsistent run configuration."""


class DataError(RuntimeError):
    """Input data violates a documented contract (shape, range, encoding)."""


class MetricError(ValueError):
    """A metric's preconditions are not met (e.g. single-class labels)."""


class ProtocolError(RuntimeError):
    """A cross-validation protocol cannot be carried out on the given data."""
