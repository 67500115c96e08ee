"""Exception hierarchy shared by every module."""


class HeegnerKitError(Exception):
    """Base class for all library errors."""


class DomainError(HeegnerKitError, ValueError):
    """An input lies outside the domain of an operation."""


class ResourceError(HeegnerKitError, RuntimeError):
    """A configured search or truncation budget was exhausted."""


class NumericError(HeegnerKitError, ArithmeticError):
    """A numerical procedure failed to converge or lost accuracy."""


class PrecisionError(NumericError):
    """Result not accurate enough at the working precision; raise prec_bits."""


class InternalError(HeegnerKitError, RuntimeError):
    """An invariant that theory guarantees was violated."""
