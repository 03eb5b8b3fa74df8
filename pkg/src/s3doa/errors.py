"""Exception types raised by the toolkit.

Everything that a caller could fix by changing its inputs derives from
``ValueError`` so plain ``except ValueError`` keeps working.
"""


class S3Error(Exception):
    """Base class for all toolkit errors."""


class InvalidSizeError(S3Error, ValueError):
    """A size parameter (sensor count, window length, ...) is out of range."""


class PartitionError(S3Error, ValueError):
    """Shift windows cannot be carved out of the available shifts."""


class EmbeddingError(S3Error, ValueError):
    """A shifted sub-array does not fit inside the full array."""


class UnsupportedGeometryError(S3Error, ValueError):
    pass


class AngleDomainError(S3Error, ValueError):
    pass


class EmptyRegionError(S3Error, ValueError):
    pass


class DimensionError(S3Error, ValueError):
    pass


class SubspaceDimensionError(DimensionError):
    pass


class ConfigError(S3Error, ValueError):
    """Configuration is structurally malformed (bad JSON, missing fields)."""


class NumericalError(S3Error, ArithmeticError):
    """A numerical routine failed to converge or produced non-finite output."""


class SchemeError(S3Error, ValueError):
    """A smoothing scheme is inconsistent with its full array."""
