"""Heegner points of discriminant -p, their trace, and the Hilbert class polynomial."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .. import arith
from ..curves import CurveSpec
from ..errors import DomainError, NumericError, PrecisionError
from ..modular import ModularCoeffs
from ..quadforms import FormClassGroup, HeegnerForm, enumerate_class_group, heegner_forms, reduced_forms
from .lattice import PeriodLattice, elliptic_exp, period_lattice
from .qexp import (
    DEFAULT_MAX_TERMS,
    ModularImage,
    eval_modular_map,
    j_invariant,
    manin_scaling,
    newform_periods,
    tau_of_form,
    terms_needed,
)


def coefficients_needed(forms: list[HeegnerForm], prec_bits: int, max_terms: int = DEFAULT_MAX_TERMS) -> int:
    """Number of a_n required to evaluate every form to 2^-(prec/2)."""
    p = -forms[0].form.disc
    a_max = max(hf.form.a for hf in forms)
    return terms_needed(math.sqrt(p) / (2 * a_max), prec_bits // 2, max_terms)


@dataclass(frozen=True)
class TraceResult:
    p: int
    z_trace: object  # sum of the per-class z, not yet scaled by c0
    images: tuple[ModularImage, ...]  # canonical class order
    forms: tuple[HeegnerForm, ...]
    manin_c0: int
    conjugation_sign: int  # conj(c0 z) = sign * c0 z mod Lambda
    conjugation_residual: object
    distinct_images: int

    @property
    def scaled(self):
        return self.manin_c0 * self.z_trace


def _eval_hex(args):
    coeffs, hf, prec_bits, max_terms = args
    img = eval_modular_map(coeffs, tau_of_form(hf, prec_bits), prec_bits, max_terms)
    return arith.mpc_to_hex(img.z), img.tail_bound, img.terms_used


def _evaluate_all(coeffs, forms, prec_bits, max_terms, workers):
    if workers <= 1 or len(forms) == 1:
        return [eval_modular_map(coeffs, tau_of_form(hf, prec_bits), prec_bits, max_terms) for hf in forms]
    ctx = arith.context(prec_bits)
    jobs = [(coeffs, hf, prec_bits, max_terms) for hf in forms]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_eval_hex, jobs))
    return [ModularImage(arith.hex_to_mpc(z, ctx), tail, M) for z, tail, M in results]


def trace_point(
    curve: CurveSpec,
    coeffs: ModularCoeffs,
    p: int,
    prec_bits: int = arith.DEFAULT_PREC_BITS,
    max_terms: int = DEFAULT_MAX_TERMS,
    workers: int = 1,
    group: FormClassGroup | None = None,
    lattice: PeriodLattice | None = None,
    manin_c0: int | None = None,
) -> TraceResult:
    """z_K = sum over the h Heegner forms of z(tau_form), summed in class order.

    The image in E(C) is elliptic_exp(c0 z_K).  Conjugation stability, that
    conj(c0 z_K) is congruent to +-c0 z_K modulo Lambda, is asserted to
    2^-(prec/4).  Evaluations may run in ``workers`` processes; the sum is
    always taken in the same order so results are bit-reproducible.
    """
    N = curve.conductor
    G = group or enumerate_class_group(p)
    forms = heegner_forms(p, N, group=G)
    needed = coefficients_needed(forms, prec_bits, max_terms)
    if coeffs.upto < needed:
        raise DomainError(f"{needed} coefficients needed for p = {p}, only {coeffs.upto} supplied")
    lat = lattice or period_lattice(curve, prec_bits)
    if manin_c0 is None:
        manin_c0 = manin_scaling(lat, newform_periods(coeffs, N, prec_bits=prec_bits, max_terms=max_terms))
    ctx = lat.ctx
    images = _evaluate_all(coeffs, forms, prec_bits, max_terms, workers)
    z = ctx.mpc(0)
    for img in images:
        z += img.z
    w = manin_c0 * z
    candidates = [(lat.distance_to_lattice(ctx.conj(w) - s * w), s) for s in (1, -1)]
    residual, sign = min(candidates, key=lambda t: t[0])
    if residual >= ctx.ldexp(1, -(prec_bits // 4)):
        raise NumericError(f"trace for p = {p} is not stable under complex conjugation (residual {float(residual):.3g})")
    return TraceResult(
        p=p,
        z_trace=z,
        images=tuple(images),
        forms=tuple(forms),
        manin_c0=manin_c0,
        conjugation_sign=sign,
        conjugation_residual=residual,
        distinct_images=count_distinct(lat, [manin_c0 * img.z for img in images], prec_bits // 4),
    )


def count_distinct(lat: PeriodLattice, zs, tol_bits: int) -> int:
    """Number of classes of ``zs`` modulo Lambda, to 2^-tol_bits."""
    tol = lat.ctx.ldexp(1, -tol_bits)
    reps: list = []
    for z in zs:
        if not any(lat.distance_to_lattice(z - r) < tol for r in reps):
            reps.append(z)
    return len(reps)


def trace_coordinates(lat: PeriodLattice, result: TraceResult):
    """(x, y) of the trace point, or None if it is the identity."""
    return elliptic_exp(lat, result.scaled)


# ---------------------------------------------------------------------------
# Hilbert class polynomial


@dataclass(frozen=True)
class HilbertClassPoly:
    p: int
    coeffs: tuple[int, ...]  # low to high degree; monic
    residual: float  # max distance of a computed coefficient to its integer
    prec_bits: int
    working_prec: int

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc


def hilbert_class_poly(p: int, prec_bits: int = arith.DEFAULT_PREC_BITS) -> HilbertClassPoly:
    """prod over reduced forms (a, b, c) of (X - j((-b + i sqrt p)/(2a))), rounded.

    The coefficients are as large as e^(pi sqrt(p) sum 1/a), so the product is
    formed with that many guard bits on top of ``prec_bits``; the rounding
    residual must then fall below 2^-(prec/4).
    """
    if p % 4 != 3 or not arith.is_prime(p):
        raise DomainError(f"need a prime p = 3 mod 4, got {p}")
    forms = reduced_forms(-p)
    h = len(forms)
    size_bits = sum(math.pi * math.sqrt(p) / f.a for f in forms) / math.log(2)
    work = prec_bits + int(size_bits) + 2 * h + 32
    ctx = arith.context(work)
    poly = [ctx.mpc(1)]  # low to high
    for f in forms:
        tau = ctx.mpc(-f.b, ctx.sqrt(p)) / (2 * f.a)
        j = j_invariant(tau, work)
        nxt = [ctx.mpc(0)] * (len(poly) + 1)
        for k, c in enumerate(poly):
            nxt[k + 1] += c
            nxt[k] -= j * c
        poly = nxt
    coeffs, residual = [], ctx.mpf(0)
    for c in poly:
        n = int(ctx.nint(c.real))
        residual = max(residual, abs(c - n))
        coeffs.append(n)
    if residual >= ctx.ldexp(1, -(prec_bits // 4)):
        raise PrecisionError(
            f"Hilbert class polynomial for p = {p} has rounding residual {float(residual):.3g}; raise prec_bits"
        )
    return HilbertClassPoly(p, tuple(coeffs), float(residual), prec_bits, work)
