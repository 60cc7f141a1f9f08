"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: data-shaped failures
(parsing, validation, store integrity, fetch, routing inputs) exit 2,
model failures exit 3, bad invocations exit 1.
"""


class IcecastError(Exception):
    """Base class for all icecast errors."""


class ParseError(IcecastError):
    """Malformed line in a text record format."""

    def __init__(self, message: str, line_no: int | None = None):
        super().__init__(message if line_no is None else f"line {line_no}: {message}")
        self.line_no = line_no


class RangeError(IcecastError):
    """Concentration outside the unit interval."""

    def __init__(self, message: str, line_no: int | None = None):
        super().__init__(message if line_no is None else f"line {line_no}: {message}")
        self.line_no = line_no


class TimestampError(IcecastError):
    """Observation timestamp is not midnight UTC."""


class IntegrityConflictError(IcecastError):
    """Two records claim the same (point, timestamp) with different values."""


class CorruptionError(IcecastError):
    """Stored data fails its checksum or cannot be read back."""


class StoreLockedError(IcecastError):
    """Another writer holds the store lock."""


class FetchError(IcecastError):
    """Remote retrieval failed (transport error or non-success status)."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class NotFoundError(IcecastError):
    """Referenced id does not exist."""


class PathError(IcecastError):
    """Cell sequence is not a valid simple path in the grid."""


class UnreachableError(IcecastError):
    """No path exists between the requested endpoints."""


class ModelError(IcecastError):
    """State-space model failure."""


class InsufficientDataError(ModelError):
    """Too few observed days to fit a model."""


class DegenerateModelError(ModelError):
    """Model produced a non-positive innovation variance or a numerically
    broken covariance."""


class MissingModelError(ModelError):
    """A grid point has no fitted model."""
