"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes, so new error conditions
should reuse one of the classes below instead of bare ValueError.
"""


class FcaError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameter(FcaError, ValueError):
    """A parameter or input violates a documented precondition."""


class ConfigError(InvalidParameter):
    """A pipeline configuration is internally inconsistent."""


class FormatError(FcaError):
    """A binary file does not parse; `offset` is the failing byte position."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DatasetError(FcaError):
    """A dataset directory violates the expected layout."""


class MetricUndefined(FcaError):
    """A metric has no defined value for the given inputs."""
