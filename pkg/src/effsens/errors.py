"""Exception hierarchy shared across the package."""


class EffsensError(Exception):
    """Base class for all package-specific errors."""


class ArgumentError(EffsensError, ValueError):
    """An operation was called with arguments violating its contract."""


class ConfigurationError(EffsensError, ValueError):
    """A configuration object is inconsistent or a sample is too small."""


class DataError(EffsensError, ValueError):
    """Input data contains non-finite or non-numeric values."""


class AccuracyWarning(UserWarning):
    """A numerical routine could not certify the requested accuracy."""
