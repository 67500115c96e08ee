"""Rational reconstruction of high-precision reals.

A trace point P_K lies in E(k_p) and is fixed up to sign by complex
conjugation, so its x-coordinate is rational and its y-coordinate is
r + s sqrt(-p) with r, s rational.  Recognition therefore only ever needs
to turn a real number into a small rational.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .. import arith
from ..curves import CurveSpec


def default_height_cap(prec_bits: int) -> int:
    """Largest cap whose numerator * denominator still fits well inside prec/4 bits."""
    return max(1, int((prec_bits / 4 * math.log10(2) - 3) / 2))


def mpf_to_fraction(v) -> Fraction:
    """The exact dyadic rational held by an mpf."""
    man, exp = arith.mpf_parts(v)
    return Fraction(man * 2**exp) if exp >= 0 else Fraction(man, 2**-exp)


def convergents(x: Fraction):
    h0, h1, k0, k1 = 0, 1, 1, 0
    while True:
        a = math.floor(x)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        yield Fraction(h1, k1)
        frac = x - a
        if frac == 0:
            return
        x = 1 / frac


def recognize(value, height_cap: int | None = None, prec_bits: int = arith.DEFAULT_PREC_BITS, tol=None) -> Fraction | None:
    """Smallest continued-fraction convergent within tolerance, or None.

    Succeeds when some convergent r has |num|, den <= 10^height_cap and
    |value - r| < tol (default 2^-(prec/4), relative to max(1, |value|)).
    ``value`` may be complex; its imaginary part must already be below tol.
    """
    ctx = arith.context(prec_bits)
    if height_cap is None:
        height_cap = default_height_cap(prec_bits)
    tol = ctx.ldexp(1, -(prec_bits // 4)) if tol is None else ctx.mpf(tol)
    value = ctx.mpmathify(value)
    if abs(ctx.im(value)) >= tol:
        return None
    value = ctx.re(value)
    if not ctx.isfinite(value):
        return None
    bound = 10**height_cap
    scale = max(ctx.mpf(1), abs(value))
    for r in convergents(mpf_to_fraction(value)):
        if r.denominator > bound or abs(r.numerator) > bound:
            return None
        if abs(value - arith.fraction_to_mpf(r, ctx)) < tol * scale:
            return r
    return None


@dataclass(frozen=True)
class RecognizedPoint:
    x: Fraction
    y_rational_part: Fraction
    y_radical_part: Fraction  # coefficient of sqrt(-p)
    p: int
    on_curve_exact: bool

    @property
    def is_rational(self) -> bool:
        return self.y_radical_part == 0

    def to_json(self) -> dict:
        return {
            "x": _frac_json(self.x),
            "y_rational_part": _frac_json(self.y_rational_part),
            "y_radical_part": _frac_json(self.y_radical_part),
            "p": str(self.p),
            "on_curve_exact": self.on_curve_exact,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RecognizedPoint":
        return cls(
            Fraction(obj["x"]),
            Fraction(obj["y_rational_part"]),
            Fraction(obj["y_radical_part"]),
            int(obj["p"]),
            bool(obj["on_curve_exact"]),
        )


def _frac_json(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def on_curve_quadratic(curve: CurveSpec, x: Fraction, r: Fraction, s: Fraction, p: int) -> bool:
    """Exact check that (x, r + s sqrt(-p)) satisfies the Weierstrass equation."""
    a1, a2, a3, a4, a6 = curve.ainvs
    # y^2 = r^2 - p s^2 + 2 r s sqrt(-p)
    lin = a1 * x + a3
    real = r * r - p * s * s + lin * r
    rad = 2 * r * s + lin * s
    return rad == 0 and real == x**3 + a2 * x * x + a4 * x + a6


def recognize_point(
    curve: CurveSpec, x, y, p: int, height_cap: int | None = None, prec_bits: int = arith.DEFAULT_PREC_BITS
) -> RecognizedPoint | None:
    """Recognise x in Q and y in Q(sqrt(-p)); None if any coordinate fails."""
    ctx = arith.context(prec_bits)
    X = recognize(x, height_cap, prec_bits)
    if X is None:
        return None
    y = ctx.mpc(y)
    R = recognize(y.real, height_cap, prec_bits)
    S = recognize(y.imag / ctx.sqrt(p), height_cap, prec_bits)
    if R is None or S is None:
        return None
    return RecognizedPoint(X, R, S, p, on_curve_quadratic(curve, X, R, S, p))
