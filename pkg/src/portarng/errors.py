"""Exception types raised by the library."""


class Error(Exception):
    """Base class for all portarng errors."""


class UnsupportedEngine(Error):
    """Operation is not available for the requested engine."""


class InvalidRange(Error):
    """Range bounds are reversed, equal or non-finite."""


class InvalidParameter(Error):
    """Distribution or simulation parameter out of domain."""


class AllocationFailure(Error):
    """Device arena cannot satisfy the requested buffer."""


class UnknownBuffer(Error):
    """Buffer handle does not belong to this task graph."""


class UnknownEvent(Error):
    """Event does not belong to this task graph."""


class KernelPanic(Error):
    """A kernel raised during execution; message carries the task id."""


class PendingWrites(Error):
    """Host copy requested while writer tasks are still pending."""


class EmptySamples(Error):
    """Timing statistics requested over an empty sample list."""


class NonPositiveTime(Error):
    """Time-to-solution values must be strictly positive."""


class EmptyPlatformSet(Error):
    """Performance portability needs at least one platform."""


class ConfigError(Error):
    """Malformed benchmark configuration or flag combination."""


class SchemaMismatch(Error):
    """CSV file does not carry the expected header."""


class NoOverlappingKeys(Error):
    """Two result files share no (engine, dist, batch) keys."""


class MissingParameterization(Error):
    """No parameterization registered for a particle kind."""


class InvalidCounts(Error):
    """Geometry synthesis called with inconsistent counts."""
