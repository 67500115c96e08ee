"""The prime family A_N and per-prime Heegner-hypothesis certificates.

For a conductor N with distinct odd primes p_1..p_r, let M = 8 p_1...p_r,
choose a = -1 modulo 8 and modulo every p_i, put t = M + 1, and take the
primes p = a t^2 (mod M).  Every such p is 3 mod 4 (so the class number of
Q(sqrt(-p)) is odd), -p is 1 mod 8 (so 2 splits) and -p is a square modulo
each p_i (so p_i splits).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

from . import arith
from .errors import DomainError, InternalError, ResourceError

DEFAULT_SEARCH_BUDGET = 10**7


@dataclass(frozen=True)
class FamilyCongruence:
    modulus: int
    residue: int
    a: int
    t: int

    def __post_init__(self):
        if math.gcd(self.residue, self.modulus) != 1:
            raise InternalError("family residue not a unit modulo M")


@dataclass(frozen=True)
class HypothesisCertificate:
    p: int
    N: int
    gcd_ok: bool
    # (q, splitting symbol of q) for every prime q | N; q = 2 is always listed
    split_witnesses: tuple[tuple[int, int], ...]
    odd_class_number_criterion: bool

    @property
    def valid(self) -> bool:
        return self.gcd_ok and self.odd_class_number_criterion and all(k == 1 for _, k in self.split_witnesses)

    def to_json(self) -> dict:
        return {
            "p": str(self.p),
            "N": str(self.N),
            "gcd_ok": self.gcd_ok,
            "split_witnesses": [[str(q), k] for q, k in self.split_witnesses],
            "odd_class_number_criterion": self.odd_class_number_criterion,
            "valid": self.valid,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "HypothesisCertificate":
        return cls(
            p=int(obj["p"]),
            N=int(obj["N"]),
            gcd_ok=bool(obj["gcd_ok"]),
            split_witnesses=tuple((int(q), int(k)) for q, k in obj["split_witnesses"]),
            odd_class_number_criterion=bool(obj["odd_class_number_criterion"]),
        )


@dataclass(frozen=True)
class FamilyPrime:
    p: int
    m_p: int
    certificate: HypothesisCertificate = field(repr=False)

    def to_json(self) -> dict:
        return {"p": str(self.p), "m_p": str(self.m_p), "hypothesis": self.certificate.to_json()}


def odd_primes(N: int) -> list[int]:
    if N < 1:
        raise DomainError("N must be >= 1")
    return [q for q in (arith.factorize(N) if N > 1 else {}) if q != 2]


def build_congruence(N: int) -> FamilyCongruence:
    """The congruence class (M, rho) that contains A_N, using the radical of N."""
    primes = odd_primes(N)
    modulus = 8 * math.prod(primes)
    # a = -1 mod 8 and mod each p_i; the smallest positive choice is M - 1
    a = arith.crt([(-1, 8)] + [(-1, q) for q in primes])
    if a != modulus - 1:
        raise InternalError(f"CRT gave a = {a}, expected {modulus - 1}")
    t = modulus + 1
    return FamilyCongruence(modulus=modulus, residue=a * t * t % modulus, a=a, t=t)


def field_discriminant(p: int) -> int:
    """Discriminant of Q(sqrt(-p)) for a prime p."""
    return -p if p % 4 == 3 else -4 * p


def verify_hypothesis(p: int, N: int) -> HypothesisCertificate:
    """Check gcd(p, N) = 1, splitting of 2 and of every prime of N, and p = 3 mod 4.

    The splitting symbol of q is kronecker(D, q) with D the field
    discriminant; for q = 2 and p = 3 mod 4 this is +1 exactly when
    -p = 1 mod 8.  The 2-witness is recorded whether or not 2 divides N,
    mirroring the family construction.
    """
    if not arith.is_prime(p):
        raise DomainError(f"{p} is not prime")
    D = field_discriminant(p)
    witnesses = [(2, arith.kronecker(D, 2))]
    witnesses += [(q, arith.kronecker(D, q)) for q in odd_primes(N)]
    return HypothesisCertificate(
        p=p,
        N=N,
        gcd_ok=math.gcd(p, N) == 1,
        split_witnesses=tuple(witnesses),
        odd_class_number_criterion=p % 4 == 3,
    )


def _member(cand: int, cong: FamilyCongruence, N: int) -> FamilyPrime:
    cert = verify_hypothesis(cand, N)
    if not cert.valid:
        raise InternalError(f"family prime {cand} fails the Heegner hypothesis for N={N}")
    return FamilyPrime(p=cand, m_p=(cand - cong.residue) // cong.modulus, certificate=cert)


def next_family_prime(
    cong: FamilyCongruence, N: int, after: int = 0, budget: int = DEFAULT_SEARCH_BUDGET
) -> FamilyPrime:
    """Smallest prime p > after in the family class, re-verified independently."""
    if after < 0:
        raise DomainError("after must be >= 0")
    M, rho = cong.modulus, cong.residue
    cand = after + 1 + (rho - after - 1) % M
    for _ in range(budget):
        if arith.is_prime(cand):
            return _member(cand, cong, N)
        cand += M
    raise ResourceError(f"no family prime found within {budget} candidates after {after}")


def family_primes(N: int, count: int, after: int = 0, budget: int = DEFAULT_SEARCH_BUDGET) -> Iterator[FamilyPrime]:
    """The first ``count`` primes of A_N above ``after``, in increasing order."""
    cong = build_congruence(N)
    for _ in range(count):
        fp = next_family_prime(cong, N, after, budget)
        yield fp
        after = fp.p


def family_primes_between(N: int, lo: int, hi: int) -> list[FamilyPrime]:
    """All primes of A_N in the closed interval [lo, hi]."""
    cong = build_congruence(N)
    cand = lo + (cong.residue - lo) % cong.modulus
    out = []
    while cand <= hi:
        if arith.is_prime(cand):
            out.append(_member(cand, cong, N))
        cand += cong.modulus
    return out
