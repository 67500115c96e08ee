"""Exact integer kernels and fixed-precision real/complex arithmetic.

Integers are plain Python ``int`` and rationals are ``fractions.Fraction``.
Multiprecision reals and complexes come from ``mpmath``; every computation
session owns its own :class:`mpmath.ctx_mp.MPContext` so that the working
precision never leaks through global state.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

from mpmath.ctx_mp import MPContext

from .errors import DomainError

DEFAULT_PREC_BITS = 256

# Deterministic Miller-Rabin: these bases are correct for every n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)
_PROBABILISTIC_ROUNDS = 64  # 4**-64 = 2**-128


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a|n), extended to n = -1 and to even n.

    Raises DomainError for n = 0 (the symbol is only defined there for
    a = +-1 and the splitting criterion never needs it).
    """
    if n == 0:
        raise DomainError("kronecker symbol undefined for n = 0")
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -result
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    if v:
        if a % 2 == 0:
            return 0
        if v % 2 and a % 8 in (3, 5):
            result = -result
    # Jacobi symbol (a|n) for odd positive n
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def _mr_round(n: int, d: int, s: int, base: int) -> bool:
    x = pow(base, d, n)
    if x in (1, n - 1):
        return True
    for _ in range(s - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def is_prime(n: int) -> bool:
    """Primality test.

    Deterministic below 2**64 (fixed witness set); above that, 64 extra
    Miller-Rabin rounds with witnesses drawn from a generator seeded by ``n``
    itself, so the answer is reproducible and wrong with probability below
    2**-128.
    """
    if n < 0:
        raise DomainError("is_prime expects n >= 0")
    if n < 2:
        return False
    for q in _SMALL_PRIMES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    if not all(_mr_round(n, d, s, b) for b in _MR_BASES):
        return False
    if n < 1 << 64:
        return True
    rng = random.Random(n)
    return all(_mr_round(n, d, s, rng.randrange(2, n - 1)) for _ in range(_PROBABILISTIC_ROUNDS))


def next_prime(n: int) -> int:
    """Smallest prime strictly greater than n."""
    m = max(n + 1, 2)
    while not is_prime(m):
        m += 1
    return m


def crt(pairs: Iterable[tuple[int, int]]) -> int:
    """Solve x = r_i (mod m_i) for pairwise coprime moduli; result in [0, prod m_i)."""
    x, m = 0, 1
    for r, mod in pairs:
        if mod <= 0:
            raise DomainError(f"modulus must be positive, got {mod}")
        g = math.gcd(m, mod)
        if g != 1:
            raise DomainError(f"moduli not coprime: gcd({m}, {mod}) = {g}")
        t = (r - x) * pow(m, -1, mod) % mod
        x += m * t
        m *= mod
    return x % m


def factorize(n: int) -> dict[int, int]:
    """Prime factorisation of a nonzero integer by trial division.

    Conductors handled here are small; the loop exits early once the
    cofactor is prime.
    """
    if n == 0:
        raise DomainError("cannot factor 0")
    n = abs(n)
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        if is_prime(n):
            break
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return dict(sorted(out.items()))


def radical(n: int) -> int:
    return math.prod(factorize(n)) if abs(n) > 1 else 1


def valuation(x: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    if x == 0:
        raise DomainError("valuation of 0 is infinite")
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def sqrt_mod_prime(a: int, p: int) -> int | None:
    """A square root of a modulo an odd prime p (Tonelli-Shanks), or None."""
    a %= p
    if a == 0:
        return 0
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c, t, r = i, b * b % p, t * b * b % p, r * b % p
    return r


def _sqrt_mod_prime_power(a: int, p: int, k: int) -> list[int]:
    """All square roots of a modulo p**k."""
    if p == 2 or a % p == 0:
        # generic lifting: every root mod p**(j+1) reduces to a root mod p**j
        roots = [r for r in range(p) if (r * r - a) % p == 0]
        mod = p
        for _ in range(k - 1):
            nxt = mod * p
            roots = [r + t * mod for r in roots for t in range(p) if ((r + t * mod) ** 2 - a) % nxt == 0]
            mod = nxt
        return sorted(set(roots))
    r = sqrt_mod_prime(a, p)
    if r is None:
        return []
    mod = p
    for _ in range(k - 1):
        mod *= p
        # Hensel: r <- r - (r^2 - a) / (2r)
        r = (r - (r * r - a) * pow(2 * r, -1, mod)) % mod
    return sorted({r % mod, (-r) % mod})


def sqrt_mod(a: int, m: int) -> list[int]:
    """All x in [0, m) with x*x = a (mod m), via factorisation, Hensel and CRT."""
    if m <= 0:
        raise DomainError("modulus must be positive")
    if m == 1:
        return [0]
    per_prime = []
    for p, k in factorize(m).items():
        roots = _sqrt_mod_prime_power(a % p**k, p, k)
        if not roots:
            return []
        per_prime.append((p**k, roots))
    sols = [0]
    mod = 1
    for pk, roots in per_prime:
        sols = [crt([(s, mod), (r, pk)]) for s in sols for r in roots]
        mod *= pk
    return sorted(sols)


# ---------------------------------------------------------------------------
# precision-tracked reals and complexes


@lru_cache(maxsize=None)
def context(prec_bits: int = DEFAULT_PREC_BITS) -> MPContext:
    """The mpmath context for a session at ``prec_bits`` of binary precision.

    Contexts are cached per precision and never mutated after creation, so
    they can be shared between threads.
    """
    if prec_bits < 16:
        raise DomainError("prec_bits must be at least 16")
    ctx = MPContext()
    ctx.prec = prec_bits
    return ctx


def mpf_to_hex(x) -> str:
    """Exact hex-float rendering of an mpf: ``[-]0x<mantissa>p<exp>``."""
    man, exp = mpf_parts(x)
    if man == 0:
        return "0x0p0"
    sign = "-" if man < 0 else ""
    return f"{sign}0x{abs(man):x}p{exp}"


def mpf_parts(x) -> tuple[int, int]:
    """Signed (mantissa, exponent) with x = mantissa * 2^exponent exactly."""
    sign, man, exp, _ = x._mpf_
    if not man and exp:
        raise DomainError(f"{x} is not finite")
    man = int(man)
    return (-man if sign else man), int(exp)


def hex_to_mpf(s: str, ctx: MPContext):
    sign = -1 if s.startswith("-") else 1
    body = s.lstrip("-")
    if not body.startswith("0x") or "p" not in body:
        raise DomainError(f"not a hex-float: {s!r}")
    man, exp = body[2:].split("p")
    return ctx.ldexp(ctx.mpf(sign * int(man, 16)), int(exp))


def mpc_to_hex(z) -> dict[str, str]:
    return {"re": mpf_to_hex(z.real), "im": mpf_to_hex(z.imag)}


def hex_to_mpc(d: dict[str, str], ctx: MPContext):
    return ctx.mpc(hex_to_mpf(d["re"], ctx), hex_to_mpf(d["im"], ctx))


def fraction_to_mpf(q, ctx: MPContext):
    q = Fraction(q)
    return ctx.mpf(q.numerator) / q.denominator

