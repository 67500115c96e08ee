"""Fourier coefficients a_n of the weight-2 newform attached to E.

a_q for q prime comes from counting points on the reduction mod q; the
rest follows from multiplicativity and the Hecke recursion.  Counting is
O(q) per prime, vectorised with numpy.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import arith
from .curves import CurveSpec
from .errors import DomainError, InternalError

CACHE_VERSION = 1


def _count_affine(curve: CurveSpec, q: int) -> int:
    """Number of affine solutions of the Weierstrass equation over F_q."""
    a1, a2, a3, a4, a6 = curve.ainvs
    if q == 2:
        return sum(
            1
            for x in range(2)
            for y in range(2)
            if (y * y + a1 * x * y + a3 * y - x**3 - a2 * x * x - a4 * x - a6) % 2 == 0
        )
    b2, b4, b6, _ = curve.b_invariants
    x = np.arange(q, dtype=np.int64)
    # completing the square: (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6
    d = np.full(q, 4 % q, dtype=np.int64)
    d = (d * x + b2 % q) % q
    d = (d * x + (2 * b4) % q) % q
    d = (d * x + b6 % q) % q
    is_sq = np.zeros(q, dtype=bool)
    is_sq[(x * x) % q] = True
    chi = np.where(d == 0, 0, np.where(is_sq[d], 1, -1))
    return q + int(chi.sum())


def _count_singular(curve: CurveSpec, q: int) -> int:
    a1, a2, a3, a4, a6 = curve.ainvs
    n = 0
    for x in range(q):
        ys = range(q) if q == 2 else [(-(a1 * x + a3) * pow(2, -1, q)) % q]
        for y in ys:
            f = y * y + a1 * x * y + a3 * y - x**3 - a2 * x * x - a4 * x - a6
            fx = a1 * y - 3 * x * x - 2 * a2 * x - a4
            fy = 2 * y + a1 * x + a3
            if f % q == 0 and fx % q == 0 and fy % q == 0:
                n += 1
    return n


def ap_good(curve: CurveSpec, q: int) -> int:
    """a_q = q + 1 - #E(F_q) at a prime of good reduction."""
    if curve.conductor % q == 0:
        raise DomainError(f"{q} divides the conductor {curve.conductor}")
    if not arith.is_prime(q):
        raise DomainError(f"{q} is not prime")
    return q - _count_affine(curve, q)


def ap_bad(curve: CurveSpec, q: int) -> int:
    """a_q = q + 1 - #E~(F_q) at a bad prime: 1 split, -1 non-split, 0 additive.

    Equivalently q - #E~_ns(F_q) with the point at infinity counted among the
    nonsingular points; the single singular point is located explicitly.
    """
    if curve.conductor % q:
        raise DomainError(f"{q} does not divide the conductor {curve.conductor}")
    if _count_singular(curve, q) != 1:
        raise InternalError(f"reduction mod {q} does not have exactly one singular point (model not minimal?)")
    a = q - _count_affine(curve, q)
    if a not in (-1, 0, 1):
        raise InternalError(f"a_{q} = {a} at a bad prime")
    return a


def ap(curve: CurveSpec, q: int) -> int:
    return ap_bad(curve, q) if curve.conductor % q == 0 else ap_good(curve, q)


@dataclass(frozen=True)
class ModularCoeffs:
    curve: CurveSpec
    upto: int
    a: tuple[int, ...]  # a[0] is unused (0), a[n] for 1 <= n <= upto

    def __getitem__(self, n: int) -> int:
        if not 1 <= n <= self.upto:
            raise IndexError(n)
        return self.a[n]

    def truncated(self, M: int) -> "ModularCoeffs":
        if M > self.upto:
            raise DomainError(f"only {self.upto} coefficients available")
        return ModularCoeffs(self.curve, M, self.a[: M + 1])


def _smallest_prime_factors(M: int) -> list[int]:
    spf = list(range(M + 1))
    for i in range(2, math.isqrt(M) + 1):
        if spf[i] == i:
            for j in range(i * i, M + 1, i):
                if spf[j] == j:
                    spf[j] = i
    return spf


def coefficients_from_ap(curve: CurveSpec, M: int, aps: dict[int, int]) -> tuple[int, ...]:
    spf = _smallest_prime_factors(M)
    a = [0] * (M + 1)
    if M >= 1:
        a[1] = 1
    for n in range(2, M + 1):
        q = spf[n]
        m, k = n, 0
        while m % q == 0:
            m //= q
            k += 1
        if m > 1:
            a[n] = a[m] * a[n // m]
        elif k == 1:
            a[n] = aps[q]
        elif curve.conductor % q == 0:
            a[n] = aps[q] * a[n // q]
        else:
            a[n] = aps[q] * a[n // q] - q * a[n // (q * q)]
    return tuple(a)


def coefficients(curve: CurveSpec, M: int, cache_dir: str | os.PathLike | None = None) -> ModularCoeffs:
    """a_1..a_M, read from / written to a per-curve JSON cache when ``cache_dir`` is given."""
    if M < 1:
        raise DomainError("need M >= 1")
    if cache_dir is not None:
        cached = load_cache(curve, cache_dir)
        if cached is not None and cached.upto >= M:
            return cached.truncated(M)
    spf = _smallest_prime_factors(M)
    aps = {q: ap(curve, q) for q in range(2, M + 1) if spf[q] == q}
    coeffs = ModularCoeffs(curve, M, coefficients_from_ap(curve, M, aps))
    if cache_dir is not None:
        save_cache(coeffs, cache_dir)
    return coeffs


# ---------------------------------------------------------------------------
# cache: one JSON file per curve, {"version", "curve", "upto", "a": [ints]}


def _cache_path(curve: CurveSpec, cache_dir) -> Path:
    safe = "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in curve.label)
    return Path(cache_dir) / f"coeffs_{safe}.json"


def load_cache(curve: CurveSpec, cache_dir) -> ModularCoeffs | None:
    path = _cache_path(curve, cache_dir)
    try:
        obj = json.loads(path.read_text())
    except (OSError, ValueError):
        return None
    if obj.get("version") != CACHE_VERSION or CurveSpec.from_json(obj["curve"]) != curve:
        return None
    a = [0] + [int(x) for x in obj["a"]]
    return ModularCoeffs(curve, int(obj["upto"]), tuple(a))


def save_cache(coeffs: ModularCoeffs, cache_dir) -> None:
    path = _cache_path(coeffs.curve, cache_dir)
    path.parent.mkdir(parents=True, exist_ok=True)
    existing = load_cache(coeffs.curve, cache_dir)
    if existing is not None and existing.upto >= coeffs.upto:
        return
    obj = {
        "version": CACHE_VERSION,
        "curve": coeffs.curve.to_json(),
        "upto": coeffs.upto,
        "a": list(coeffs.a[1:]),
    }
    # atomic replace so concurrent readers never see a partial file
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        json.dump(obj, fh, separators=(",", ":"))
    os.replace(tmp, path)
