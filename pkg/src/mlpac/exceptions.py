"""Exception hierarchy shared across the package."""


class MlpacError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(MlpacError):
    """Invalid configuration value (bad layer dims, infeasible rates, ...)."""


class InputError(MlpacError):
    """Structurally invalid runtime input (shape mismatch, bad index, ...)."""


class NumericError(MlpacError):
    """Non-finite values where finite arithmetic is required."""


class FileFormatError(MlpacError):
    """Malformed dataset or checkpoint file. Carries a 1-based line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MetricError(MlpacError):
    """A metric is undefined for the given targets (e.g. mAP with no positives)."""
