"""Exception hierarchy shared across the package.

The CLI maps these onto exit code 2 (data / domain problems), keeping
exit code 1 for usage errors.
"""


class SpatialCPError(Exception):
    """Base class for all errors raised by this package."""


class DataFormatError(SpatialCPError):
    """Malformed or inconsistent input files."""


class DomainError(SpatialCPError):
    """Mathematically invalid request (e.g. zero kernel distance with a
    negative exponent, or a log of a zero-length edge)."""


class UnsupportedKernelError(SpatialCPError):
    """Operation requires a geometric metric kernel."""
