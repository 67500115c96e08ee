"""Heegner points attached to the prime family A_N: exact class-group and
Galois certification plus numerical construction on an elliptic curve."""

__version__ = "0.1.0"

from .curves import KNOWN_CURVES, CurveSpec, parse_curve
from .errors import DomainError, HeegnerKitError, InternalError, NumericError, PrecisionError, ResourceError

__all__ = [
    "KNOWN_CURVES",
    "CurveSpec",
    "DomainError",
    "HeegnerKitError",
    "InternalError",
    "NumericError",
    "PrecisionError",
    "ResourceError",
    "__version__",
    "parse_curve",
]
