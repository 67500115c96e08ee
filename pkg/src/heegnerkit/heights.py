"""Exact group law on E(Q) and canonical heights by local decomposition.

hhat(P) = 2 * sum_v lambda_v(P), with local heights normalised so that the
finite parts are rational multiples of log p.  The archimedean part uses the
q-product for the Weierstrass sigma function at the elliptic logarithm of P;
the finite parts use the closed formulas for minimal models (so the curve is
assumed minimal at every prime).

Torsion is decided exactly: over Q a torsion point has order at most 12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from . import arith
from .analytic.lattice import PeriodLattice, elliptic_log, period_lattice
from .curves import CurveSpec
from .errors import DomainError

MAX_TORSION_ORDER = 12
DEFAULT_GRAM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class RationalPoint:
    x: Fraction
    y: Fraction
    curve: CurveSpec

    def __post_init__(self):
        object.__setattr__(self, "x", Fraction(self.x))
        object.__setattr__(self, "y", Fraction(self.y))
        if not self.curve.contains(self.x, self.y):
            raise DomainError(f"({self.x}, {self.y}) is not on {self.curve.label}")

    def to_json(self) -> dict:
        return {"x": f"{self.x.numerator}/{self.x.denominator}", "y": f"{self.y.numerator}/{self.y.denominator}"}

    @classmethod
    def from_json(cls, obj: dict, curve: CurveSpec) -> "RationalPoint":
        return cls(Fraction(obj["x"]), Fraction(obj["y"]), curve)


# None stands for the point at infinity throughout.
Point = RationalPoint | None


def negate(P: Point) -> Point:
    if P is None:
        return None
    a1, _, a3, _, _ = P.curve.ainvs
    return RationalPoint(P.x, -P.y - a1 * P.x - a3, P.curve)


def add_points(P: Point, Q: Point) -> Point:
    """Chord-and-tangent addition in exact rationals."""
    if P is None:
        return Q
    if Q is None:
        return P
    if P.curve != Q.curve:
        raise DomainError("points lie on different curves")
    a1, a2, a3, a4, a6 = P.curve.ainvs
    if P.x == Q.x:
        if P.y + Q.y + a1 * Q.x + a3 == 0:
            return None
        lam = (3 * P.x**2 + 2 * a2 * P.x + a4 - a1 * P.y) / (2 * P.y + a1 * P.x + a3)
    else:
        lam = (Q.y - P.y) / (Q.x - P.x)
    nu = P.y - lam * P.x
    x3 = lam * lam + a1 * lam - a2 - P.x - Q.x
    y3 = -(lam + a1) * x3 - nu - a3
    return RationalPoint(x3, y3, P.curve)


def subtract_points(P: Point, Q: Point) -> Point:
    return add_points(P, negate(Q))


def multiply(P: Point, n: int) -> Point:
    """n P by double-and-add; negative n allowed."""
    if n < 0:
        P, n = negate(P), -n
    result, base = None, P
    while n:
        if n & 1:
            result = add_points(result, base)
        base = add_points(base, base)
        n >>= 1
    return result


def is_torsion(P: Point) -> bool:
    """True iff n P = O for some 1 <= n <= 12."""
    Q = P
    for _ in range(MAX_TORSION_ORDER):
        if Q is None:
            return True
        Q = add_points(Q, P)
    return False


def naive_height(P: Point) -> float:
    """log max(|num x|, den x); 0 at the identity."""
    if P is None:
        return 0.0
    return math.log(max(abs(P.x.numerator), P.x.denominator))


# ---------------------------------------------------------------------------
# local heights


def _v(q: Fraction, p: int) -> float:
    if q == 0:
        return math.inf
    q = Fraction(q)
    v = 0
    if q.numerator % p == 0:
        v = arith.valuation(q.numerator, p)
    elif q.denominator % p == 0:
        v = -arith.valuation(q.denominator, p)
    return v


def local_height_finite(P: RationalPoint, p: int) -> Fraction:
    """lambda_p(P) as a rational multiple of log p."""
    E = P.curve
    a1, a2, a3, a4, _ = E.ainvs
    b2, b4, b6, b8 = E.b_invariants
    c4, _ = E.c_invariants
    x, y = P.x, P.y
    n = arith.valuation(E.discriminant, p) if E.discriminant % p == 0 else 0
    lam = Fraction(max(0, -_v(x, p)), 2) + Fraction(n, 12)
    if n == 0:
        return lam
    A = _v(3 * x * x + 2 * a2 * x + a4 - a1 * y, p)
    B = _v(2 * y + a1 * x + a3, p)
    if A <= 0 or B <= 0:
        return lam  # P reduces to a nonsingular point
    if c4 % p:
        # multiplicative: P meets component min(B, n/2) of an n-gon
        m = min(Fraction(B), Fraction(n, 2))
        return lam - m * (n - m) / (2 * n)
    C = _v(3 * x**4 + b2 * x**3 + 3 * b4 * x * x + 3 * b6 * x + b8, p)
    if C >= 3 * B:
        return lam - Fraction(B, 3)
    return lam - Fraction(int(C), 8)


def local_height_infinite(lat: PeriodLattice, z):
    """-1/2 B2(r) log|q| - log|1 - u| - sum log|(1 - q^n u)(1 - q^n / u)|.

    u = exp(2 pi i z / omega1) after translating z so that its
    omega2-coordinate r lies in [0, 1); B2(t) = t^2 - t + 1/6.
    """
    ctx = lat.ctx
    tau = lat.tau
    t = ctx.mpc(z) / lat.omega1
    k = ctx.floor(t.imag / tau.imag)
    t -= k * tau
    r = t.imag / tau.imag
    q = lat.nome
    u = ctx.exp(2j * ctx.pi * t)
    s = -(r * r - r + ctx.mpf(1) / 6) / 2 * ctx.log(abs(q)) - ctx.log(abs(1 - u))
    eps = ctx.ldexp(1, -lat.prec_bits - 8)
    qn = ctx.mpc(1)
    while True:
        qn *= q
        s -= ctx.log(abs((1 - qn * u) * (1 - qn / u)))
        if abs(qn) / abs(u) < eps:
            break
    return s


@dataclass(frozen=True)
class HeightReport:
    point: RationalPoint | None
    hhat: float
    naive: float
    torsion: bool
    method: str
    local: dict  # place ("inf" or prime as str) -> contribution to hhat / 2

    def to_json(self) -> dict:
        return {
            "point": None if self.point is None else self.point.to_json(),
            "hhat": self.hhat,
            "naive": self.naive,
            "torsion": self.torsion,
            "method": self.method,
        }


def canonical_height_mp(P: RationalPoint, prec_bits: int = arith.DEFAULT_PREC_BITS):
    """hhat(P) as an mpf at ``prec_bits``, with its local contributions."""
    lat = period_lattice(P.curve, prec_bits)
    ctx = lat.ctx
    z = elliptic_log(lat, P.x, P.y)
    local = {"inf": local_height_infinite(lat, z)}
    primes = set(arith.factorize(P.curve.discriminant))
    if P.x.denominator > 1:
        # den x is a square d^2
        d = math.isqrt(P.x.denominator)
        primes |= set(arith.factorize(d))
    for p in sorted(primes):
        lam = local_height_finite(P, p)
        if lam:
            local[str(p)] = arith.fraction_to_mpf(lam, ctx) * ctx.log(p)
    return 2 * ctx.fsum(local.values()), local


def canonical_height(P: Point, prec_bits: int = arith.DEFAULT_PREC_BITS) -> HeightReport:
    if P is None:
        return HeightReport(None, 0.0, 0.0, True, "identity", {})
    if is_torsion(P):
        return HeightReport(P, 0.0, naive_height(P), True, "torsion", {})
    h, local = canonical_height_mp(P, prec_bits)
    return HeightReport(P, float(h), naive_height(P), False, "local-decomposition", {k: float(v) for k, v in local.items()})


def height_mp(P: Point, prec_bits: int = arith.DEFAULT_PREC_BITS):
    ctx = arith.context(prec_bits)
    if P is None or is_torsion(P):
        return ctx.mpf(0)
    return canonical_height_mp(P, prec_bits)[0]


def height_pairing(P: Point, Q: Point, prec_bits: int = arith.DEFAULT_PREC_BITS):
    """<P, Q> = (hhat(P + Q) - hhat(P) - hhat(Q)) / 2."""
    return (height_mp(add_points(P, Q), prec_bits) - height_mp(P, prec_bits) - height_mp(Q, prec_bits)) / 2


@dataclass(frozen=True)
class GramResult:
    matrix: tuple[tuple[float, ...], ...]
    det: float
    independent: bool
    tolerance: float


def gram_regulator(
    points: list[RationalPoint], tolerance: float = DEFAULT_GRAM_TOLERANCE, prec_bits: int = arith.DEFAULT_PREC_BITS
) -> GramResult:
    """Gram matrix of the height pairing; independent iff det > tolerance."""
    if not points:
        return GramResult((), 1.0, True, tolerance)
    if len({P.curve for P in points}) != 1:
        raise DomainError("points lie on different curves")
    ctx = arith.context(prec_bits)
    n = len(points)
    hs = [height_mp(P, prec_bits) for P in points]
    G = ctx.matrix(n, n)
    for i in range(n):
        G[i, i] = hs[i]
        for j in range(i + 1, n):
            G[i, j] = G[j, i] = (height_mp(add_points(points[i], points[j]), prec_bits) - hs[i] - hs[j]) / 2
    det = ctx.det(G)
    rows = tuple(tuple(float(G[i, j]) for j in range(n)) for i in range(n))
    return GramResult(rows, float(det), bool(det > tolerance), tolerance)
