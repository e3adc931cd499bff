"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: ``ArgumentError`` -> 2,
``CapacityError`` -> 3, ``InvariantViolation`` -> 4.
"""


class BccdError(Exception):
    """Base class for all errors raised by this package."""


class ArgumentError(BccdError, ValueError):
    """Bad input: invalid node ids, malformed files, mismatched shapes."""


class CapacityError(BccdError):
    """A structure is larger than an exhaustive routine can handle."""


class InvariantViolation(BccdError):
    """An internal consistency check failed."""


class GenerationError(BccdError):
    """Random generation could not satisfy its constraints."""
