"""
Error types raised by the matvec library.

Input problems also derive from ``ValueError`` so generic callers keep working.
Every class carries the process exit code the command line maps it to.
"""


class NsMatvecError(Exception):
    exit_code = 1


class UsageError(NsMatvecError, ValueError):
    """Conflicting or missing command/configuration options."""


class DomainError(NsMatvecError, ValueError):
    """A point lies outside the box or a field value outside its declared bounds."""


class UnsupportedParameterError(NsMatvecError, ValueError):
    pass


class OracleSizeError(NsMatvecError, ValueError):
    """The dense oracle was asked for more points than its cap allows."""


class InvalidSchemeError(NsMatvecError, ValueError):
    pass


class InvalidIntervalError(NsMatvecError, ValueError):
    pass


class InvalidToleranceError(NsMatvecError, ValueError):
    pass


class ShapeError(NsMatvecError, ValueError):
    pass


class ResourceError(NsMatvecError, RuntimeError):
    """A memory estimate exceeds the configured cap."""

    exit_code = 3
