"""Exception types shared across the package."""


class CubistMergeError(Exception):
    """Base class for all library errors."""


class InvalidSpecError(CubistMergeError, ValueError):
    """A reduction spec or model config is invalid for the given input."""


class InfeasibleRateError(InvalidSpecError):
    """The requested reduction rate exceeds what a strategy can remove."""


class GridFileError(CubistMergeError, ValueError):
    """A grid file is malformed (bad magic, version, length, or payload)."""


class SpatialIncompatibilityError(CubistMergeError, ValueError):
    """A token layout cannot be partitioned into the requested windows."""
