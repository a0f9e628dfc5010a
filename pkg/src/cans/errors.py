"""Exception hierarchy shared across the package."""


class CansError(Exception):
    """Base class for all package errors."""


class DomainError(CansError, ValueError):
    """An argument lies outside the domain of a model function."""


class InvariantError(CansError, ValueError):
    """A domain object failed validation.

    ``field`` carries a dotted path to the offending value when known,
    e.g. ``streams[2].framerate``.
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}" if field else message)


class ProfileMissingError(InvariantError):
    """A detector has no processing-latency profile for a requested resolution."""


class ProfileFormatError(CansError, ValueError):
    """A profile, trace or detection file could not be parsed."""


class EnumerationCapError(CansError, ValueError):
    """Exhaustive search would exceed the configured candidate cap."""


class StartupInfeasibleError(CansError, RuntimeError):
    """No feasible configuration exists at the first simulation slot."""

    def __init__(self, message: str, constraint: str):
        self.constraint = constraint
        super().__init__(message)


class FrameMismatchError(CansError, ValueError):
    """Detected and golden detections do not cover the same frames."""


class UsageError(CansError, ValueError):
    """A caller passed arguments that make no sense for the operation."""
