"""Exception types shared across the package."""


class MetacauseError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(MetacauseError):
    """Invalid configuration value or combination."""


class ShapeMismatchError(MetacauseError):
    """Array dimensions incompatible with the requested operation."""


class NumericError(MetacauseError):
    """Non-finite value encountered where a finite one is required."""


class PreconditionError(MetacauseError):
    """Input violates an operation's documented precondition."""


class DegenerateDataError(MetacauseError):
    """Dataset cannot be processed (e.g. zero-variance variable)."""


class TapeReusedError(MetacauseError):
    """A backprop tape was consumed twice."""


class MetricUndefinedError(MetacauseError):
    """Metric is undefined for the given inputs (e.g. single-class AUPRC)."""


class DataFormatError(MetacauseError):
    """Malformed data or metadata file.

    Carries the offending path and, where known, the 1-based line number.
    """

    def __init__(self, message, path=None, line=None):
        detail = message
        if path is not None:
            detail = f"{path}: {detail}"
        if line is not None:
            detail = f"{detail} (line {line})"
        super().__init__(detail)
        self.path = path
        self.line = line
