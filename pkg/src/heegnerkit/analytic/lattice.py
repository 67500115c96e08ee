"""Period lattice of E and the uniformisation C/Lambda -> E(C).

The lattice is that of the invariant differential dx/(2y + a1 x + a3),
computed by the arithmetic-geometric mean.  Weierstrass functions are
evaluated through q-expansions in u = exp(2 pi i z / omega1), which converge
geometrically once z is reduced into the fundamental parallelogram.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

from .. import arith
from ..curves import CurveSpec
from ..errors import NumericError

_AGM_BUDGET = 10_000


@dataclass(frozen=True)
class PeriodLattice:
    """Lambda = Z omega1 + Z omega2 with omega1 > 0 real and Im(omega2/omega1) > 0."""

    omega1: object
    omega2: object
    curve: CurveSpec
    prec_bits: int
    real_roots: tuple  # real roots (x-coordinate) of 4x^3 + b2 x^2 + 2 b4 x + b6, decreasing

    @property
    def ctx(self):
        return arith.context(self.prec_bits)

    @property
    def tau(self):
        return self.omega2 / self.omega1

    @property
    def components(self) -> int:
        """Number of connected components of E(R)."""
        return 2 if self.curve.discriminant > 0 else 1

    @property
    def real_period(self):
        """Integral of |omega| over E(R): omega1 times the number of components."""
        return self.components * self.omega1

    @cached_property
    def nome(self):
        ctx = self.ctx
        return ctx.exp(2j * ctx.pi * self.tau)

    def coordinates(self, z):
        """Real (s, t) with z = s omega1 + t omega2."""
        ctx = self.ctx
        w = ctx.mpc(z) / self.omega1
        t = w.imag / self.tau.imag
        s = w.real - t * self.tau.real
        return s, t

    def reduce(self, z):
        """Representative of z mod Lambda with both lattice coordinates in [-1/2, 1/2)."""
        ctx = self.ctx
        s, t = self.coordinates(z)
        return (s - ctx.floor(s + 0.5)) * self.omega1 + (t - ctx.floor(t + 0.5)) * self.omega2

    def distance_to_lattice(self, z, scale: int = 1):
        """max(|s - round(s)|, |t - round(t)|) for the coordinates of scale * z."""
        ctx = self.ctx
        s, t = self.coordinates(scale * z)
        return max(abs(s - ctx.nint(s)), abs(t - ctx.nint(t)))

    def g2_g3(self):
        """Lattice invariants from Eisenstein series: g2 = 60 G4, g3 = 140 G6."""
        ctx = self.ctx
        q = self.nome
        e4, e6 = ctx.mpc(1), ctx.mpc(1)
        n, qn = 1, ctx.mpc(1)
        eps = ctx.ldexp(1, -self.prec_bits - 16)
        while True:
            qn *= q
            term = qn / (1 - qn)
            e4 += 240 * n**3 * term
            e6 -= 504 * n**5 * term
            if abs(qn) * n**5 < eps:
                break
            n += 1
        k = 2 * ctx.pi / self.omega1
        return k**4 * e4 / 12, k**6 * e6 / 216

    def invariant_residual(self):
        """Relative mismatch between lattice g2, g3 and c4/12, c6/216 of the curve."""
        g2, g3 = self.g2_g3()
        c4, c6 = self.curve.c_invariants
        ctx = self.ctx
        r = []
        for got, want in ((g2, ctx.mpf(c4) / 12), (g3, ctx.mpf(c6) / 216)):
            r.append(abs(got - want) / max(abs(want), ctx.mpf(1)))
        return max(r)


@lru_cache(maxsize=64)
def period_lattice(curve: CurveSpec, prec_bits: int = arith.DEFAULT_PREC_BITS) -> PeriodLattice:
    """AGM periods; handles three real 2-division points (Delta > 0) and one (Delta < 0)."""
    ctx = arith.context(prec_bits)
    b2, b4, b6, _ = curve.b_invariants
    roots = ctx.polyroots([4, b2, 2 * b4, b6], maxsteps=500, extraprec=2 * prec_bits)
    i = ctx.mpc(0, 1)
    if curve.discriminant > 0:
        e1, e2, e3 = sorted((ctx.re(r) for r in roots), reverse=True)
        w1 = ctx.pi / _agm(ctx, ctx.sqrt(e1 - e3), ctx.sqrt(e1 - e2))
        w2 = i * ctx.pi / _agm(ctx, ctx.sqrt(e1 - e3), ctx.sqrt(e2 - e3))
        real_roots = (e1, e2, e3)
    else:
        e1 = max((r for r in roots), key=lambda r: -abs(ctx.im(r)))
        e1 = ctx.re(e1)
        alpha = 3 * e1 + ctx.mpf(b2) / 4
        beta = ctx.sqrt(3 * e1 * e1 + ctx.mpf(b2) / 2 * e1 + ctx.mpf(b4) / 2)
        w1 = 2 * ctx.pi / _agm(ctx, 2 * ctx.sqrt(beta), ctx.sqrt(2 * beta + alpha))
        w2 = -w1 / 2 + i * ctx.pi / _agm(ctx, 2 * ctx.sqrt(beta), ctx.sqrt(2 * beta - alpha))
        real_roots = (e1,)
    return PeriodLattice(ctx.mpf(w1), ctx.mpc(w2), curve, prec_bits, real_roots)


def _agm(ctx, a, b):
    eps = ctx.ldexp(1, -ctx.prec + 4)
    for _ in range(_AGM_BUDGET):
        if abs(a - b) <= eps * abs(a):
            return (a + b) / 2
        a, b = (a + b) / 2, ctx.sqrt(a * b)
    raise NumericError("AGM did not converge")


def weierstrass_p(lat: PeriodLattice, z):
    """(wp(z), wp'(z)) for the lattice, z not a lattice point."""
    ctx = lat.ctx
    z = lat.reduce(z)
    two_pi_i = 2j * ctx.pi
    q = lat.nome
    u = ctx.exp(two_pi_i * z / lat.omega1)
    if u == 1:
        raise NumericError("wp evaluated at a lattice point")
    wp = ctx.mpf(1) / 12 + u / (1 - u) ** 2
    dwp = u * (1 + u) / (1 - u) ** 3
    eps = ctx.ldexp(1, -lat.prec_bits - 16)
    qn = ctx.mpc(1)
    bound = max(abs(u), 1 / abs(u))
    while True:
        qn *= q
        A, B = qn * u, qn / u
        wp += A / (1 - A) ** 2 + B / (1 - B) ** 2 - 2 * qn / (1 - qn) ** 2
        dwp += A * (1 + A) / (1 - A) ** 3 - B * (1 + B) / (1 - B) ** 3
        if abs(qn) * bound < eps:
            break
    k = two_pi_i / lat.omega1
    return k * k * wp, k**3 * dwp


def elliptic_exp(lat: PeriodLattice, z, tol_bits: int | None = None):
    """Point (x, y) of E(C) corresponding to z, or None for the identity.

    z within 2^-(prec/4) (in lattice coordinates) of Lambda maps to the
    identity.
    """
    ctx = lat.ctx
    tol_bits = lat.prec_bits // 4 if tol_bits is None else tol_bits
    if lat.distance_to_lattice(z) < ctx.ldexp(1, -tol_bits):
        return None
    X, Y = weierstrass_p(lat, z)
    a1, _, a3, _, _ = lat.curve.ainvs
    b2 = lat.curve.b_invariants[0]
    x = X - ctx.mpf(b2) / 12
    y = (Y - a1 * x - a3) / 2
    return x, y


def curve_residual(curve: CurveSpec, x, y):
    a1, a2, a3, a4, a6 = curve.ainvs
    lhs = y * y + a1 * x * y + a3 * y
    rhs = x**3 + a2 * x * x + a4 * x + a6
    return abs(lhs - rhs) / max(abs(rhs), abs(lhs), 1)


def elliptic_log(lat: PeriodLattice, x, y):
    """z with elliptic_exp(z) = (x, y) for a real point; z is real or on omega2/2 + R.

    A monotone bisection at low precision brackets z on the real locus, then
    Newton's method on wp - x' finishes at full precision.
    """
    ctx = lat.ctx
    a1, _, a3, _, _ = lat.curve.ainvs
    b2 = lat.curve.b_invariants[0]
    x, y = _real(ctx, x), _real(ctx, y)
    X = x + ctx.mpf(b2) / 12
    Y = 2 * y + a1 * x + a3
    low = period_lattice(lat.curve, 64) if lat.prec_bits > 64 else lat
    lctx = low.ctx
    Xl = lctx.mpf(X)
    half = low.omega1 / 2
    on_egg = lat.components == 2 and X - ctx.mpf(b2) / 12 < lat.real_roots[0]
    if on_egg:
        base_low, base = low.omega2 / 2, lat.omega2 / 2

        def f(t):  # wp increases from e3 to e2 along omega2/2 + [0, omega1/2]
            return lctx.re(weierstrass_p(low, base_low + t)[0]) - Xl

    else:
        base_low, base = 0, 0

        def f(t):  # wp decreases from +inf to e1 along (0, omega1/2]
            return Xl - lctx.re(weierstrass_p(low, t)[0])

    lo, hi = lctx.ldexp(1, -300) * half, half
    for _ in range(62):
        mid = (lo + hi) / 2
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    z = base + ctx.mpf((lo + hi) / 2)
    prev = None
    for _ in range(64):
        P, dP = weierstrass_p(lat, z)
        if dP == 0:
            break
        step = ctx.re((P - X) / dP)
        z = z - step
        if prev is not None and abs(step) <= ctx.ldexp(abs(z), -lat.prec_bits + 8):
            break
        prev = step
    _, dP = weierstrass_p(lat, z)
    if ctx.re(dP) * Y < 0:
        z = -z
    return z


def _real(ctx, v):
    if isinstance(v, (Fraction, int)):
        return arith.fraction_to_mpf(v, ctx)
    return ctx.mpf(v)
