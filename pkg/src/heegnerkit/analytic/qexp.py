"""q-expansions: the modular parametrisation and the j-function.

The map X_0(N) -> C/Lambda is tau -> sum_{n>=1} (a_n / n) q^n with
q = exp(2 pi i tau).  Truncation uses |a_n| <= n, so the tail after M terms
is at most sum_{n>M} n r^n with r = |q|, which has a closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .. import arith
from ..errors import DomainError, NumericError, ResourceError
from ..modular import ModularCoeffs
from ..quadforms import HeegnerForm
from .lattice import PeriodLattice

DEFAULT_MAX_TERMS = 200_000


@dataclass(frozen=True)
class HeegnerTau:
    form: HeegnerForm
    tau: object  # mpc, Im > 0

    @property
    def disc(self) -> int:
        return self.form.form.disc


@dataclass(frozen=True)
class ModularImage:
    z: object
    tail_bound: float  # log2 of the bound on the discarded tail
    terms_used: int


def tau_of_form(hf: HeegnerForm, prec_bits: int = arith.DEFAULT_PREC_BITS) -> HeegnerTau:
    """tau = (-b + i sqrt(|D|)) / (2a), the root of a x^2 + b x + c in the upper half plane."""
    ctx = arith.context(prec_bits)
    a, b, _ = hf.form
    D = hf.form.disc
    return HeegnerTau(hf, ctx.mpc(-b, ctx.sqrt(-D)) / (2 * a))


def log2_tail(r: float, M: int) -> float:
    """log2 of sum_{n > M} n r^n = r^(M+1) ((M+1) - M r) / (1 - r)^2."""
    return ((M + 1) * math.log(r) + math.log((M + 1) - M * r) - 2 * math.log1p(-r)) / math.log(2)


def terms_needed(im_tau: float, target_bits: int, max_terms: int = DEFAULT_MAX_TERMS) -> int:
    """Smallest M with tail sum_{n>M} n e^(-2 pi n Im tau) < 2^-target_bits."""
    if im_tau <= 0:
        raise DomainError("Im tau must be positive")
    r = math.exp(-2 * math.pi * im_tau)
    if r >= 1.0:
        raise ResourceError(f"Im tau = {im_tau:g} is too small for q-expansion evaluation")
    # log tail is eventually decreasing in M; bracket then bisect
    lo, hi = 0, 1
    while log2_tail(r, hi) >= -target_bits:
        lo, hi = hi, hi * 2
        if hi > 4 * max_terms:
            break
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if log2_tail(r, mid) < -target_bits:
            hi = mid
        else:
            lo = mid
    M = max(hi, 1)
    if M > max_terms:
        raise ResourceError(
            f"{M} q-expansion terms needed at Im tau = {im_tau:.3g} (budget {max_terms}); "
            "move tau to a Gamma_0(N)-equivalent point of larger imaginary part"
        )
    return M


def eval_modular_map(
    coeffs: ModularCoeffs, tau, prec_bits: int = arith.DEFAULT_PREC_BITS, max_terms: int = DEFAULT_MAX_TERMS
) -> ModularImage:
    """z(tau) = sum (a_n / n) q^n truncated so the tail is below 2^-(prec/2)."""
    ctx = arith.context(prec_bits)
    if isinstance(tau, HeegnerTau):
        tau = tau.tau
    tau = ctx.mpc(tau)
    if tau.imag <= 0:
        raise DomainError("tau must lie in the upper half plane")
    M = terms_needed(float(tau.imag), prec_bits // 2, max_terms)
    if M > coeffs.upto:
        raise DomainError(f"{M} coefficients needed, only {coeffs.upto} supplied")
    q = ctx.exp(2j * ctx.pi * tau)
    a = coeffs.a
    s = ctx.mpc(0)
    for n in range(M, 0, -1):
        s = s * q
        if a[n]:
            s += ctx.mpf(a[n]) / n
    r = math.exp(-2 * math.pi * float(tau.imag))
    return ModularImage(z=s * q, tail_bound=log2_tail(r, M), terms_used=M)


# ---------------------------------------------------------------------------
# j-invariant


def reduce_to_fundamental_domain(tau, ctx):
    """SL2(Z)-equivalent point with |Re| <= 1/2 and |tau| >= 1."""
    tau = ctx.mpc(tau)
    for _ in range(10_000):
        tau -= ctx.nint(tau.real)
        if abs(tau) < 1:
            tau = -1 / tau
        else:
            return tau
    raise NumericError("fundamental domain reduction did not terminate")


def j_invariant(tau, prec_bits: int = arith.DEFAULT_PREC_BITS):
    """j(tau) = E4(tau)^3 / Delta(tau), with Delta = q prod (1 - q^n)^24."""
    ctx = arith.context(prec_bits)
    tau = reduce_to_fundamental_domain(tau, ctx)
    q = ctx.exp(2j * ctx.pi * tau)
    r = abs(q)
    eps = ctx.ldexp(1, -prec_bits - 16)
    e4 = ctx.mpc(1)
    prod = ctx.mpc(1)
    qn = ctx.mpc(1)
    n = 0
    while True:
        n += 1
        qn *= q
        e4 += 240 * n**3 * qn / (1 - qn)  # sum sigma_3(n) q^n as Lambert series
        prod *= 1 - qn
        if n**4 * abs(qn) < eps * (1 - r):
            break
    delta = q * prod**24
    return e4**3 / delta


# ---------------------------------------------------------------------------
# periods of the newform and the Manin scaling


def newform_periods(
    coeffs: ModularCoeffs, N: int, count: int = 6, prec_bits: int = arith.DEFAULT_PREC_BITS, max_terms: int = DEFAULT_MAX_TERMS
) -> list:
    """Periods z(gamma tau0) - z(tau0) for gamma = [[a, b], [N, d]], d = 1, 2, ...

    With tau0 = (-d + i)/N we get gamma tau0 = a/N + i/N, so both evaluation
    points have imaginary part 1/N.
    """
    ctx = arith.context(prec_bits)
    out = []
    d = 0
    while len(out) < count and d < max(N, 2) + count:
        d += 1
        if math.gcd(d, N) != 1:
            continue
        a = pow(d, -1, N) if N > 1 else 1
        tau0 = ctx.mpc(-d, 1) / N
        tau1 = ctx.mpc(a, 1) / N
        z0 = eval_modular_map(coeffs, tau0, prec_bits, max_terms).z
        z1 = eval_modular_map(coeffs, tau1, prec_bits, max_terms).z
        out.append(z1 - z0)
    return out


def manin_scaling(lat: PeriodLattice, periods, max_c: int = 4, tol_bits: int | None = None) -> int:
    """Smallest c in 1..max_c such that every period lies in (1/c) Lambda."""
    ctx = lat.ctx
    tol = ctx.ldexp(1, -(lat.prec_bits // 4 if tol_bits is None else tol_bits))
    for c in range(1, max_c + 1):
        if all(lat.distance_to_lattice(w, scale=c) < tol for w in periods):
            return c
    raise NumericError(f"newform periods do not lie in (1/c) Lambda for any c <= {max_c}")
