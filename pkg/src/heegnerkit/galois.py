"""Gal(H_p/Q) as the generalized dihedral group of the class group.

An element is a pair (gamma, sign): gamma a class index, sign +1 on the
subgroup Gal(H_p/k_p) and -1 on the coset of complex conjugation.  The
group law is (g1, e1)(g2, e2) = (g1 * g2^e1, e1 e2), which encodes the
relation sigma gamma = gamma^-1 sigma for every involution sigma.

Only the counting structure is modelled: which Atkin-Lehner twist a given
involution induces on Heegner points is not fixed, and involution j is
labelled by the j-th class in the canonical (a, b) order.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError
from .prime_family import FamilyPrime
from .quadforms import FormClassGroup, HeegnerForm, enumerate_class_group, heegner_forms


@dataclass(frozen=True)
class DihedralElement:
    gamma: int
    sign: int
    disc: int

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise DomainError(f"sign must be +-1, got {self.sign}")

    @property
    def is_involution(self) -> bool:
        return self.sign == -1


@dataclass(frozen=True)
class InvolutionLabel:
    j: int
    element: DihedralElement


@dataclass(frozen=True)
class SigmaSelector:
    """The family Sigma_j: restrict to the j-th involution at every listed prime."""

    j: int
    primes: tuple[FamilyPrime, ...]


class DihedralGroup:
    def __init__(self, G: FormClassGroup):
        self.G = G

    @property
    def order(self) -> int:
        return 2 * self.G.h

    def element(self, gamma: int, sign: int = 1) -> DihedralElement:
        if not 0 <= gamma < self.G.h:
            raise DomainError(f"class index {gamma} out of range 0..{self.G.h - 1}")
        return DihedralElement(gamma, sign, self.G.disc)

    @property
    def identity(self) -> DihedralElement:
        return self.element(self.G.identity, 1)

    @property
    def complex_conjugation(self) -> DihedralElement:
        return self.element(self.G.identity, -1)

    def _check(self, *xs: DihedralElement) -> None:
        for x in xs:
            if x.disc != self.G.disc:
                raise DomainError(f"element of disc {x.disc} used in group of disc {self.G.disc}")

    def multiply(self, x: DihedralElement, y: DihedralElement) -> DihedralElement:
        self._check(x, y)
        g2 = y.gamma if x.sign == 1 else self.G.inv(y.gamma)
        return self.element(self.G.mul(x.gamma, g2), x.sign * y.sign)

    def inverse(self, x: DihedralElement) -> DihedralElement:
        self._check(x)
        if x.sign == -1:
            return x
        return self.element(self.G.inv(x.gamma), 1)

    def elements(self) -> list[DihedralElement]:
        return [self.element(g, s) for s in (1, -1) for g in range(self.G.h)]

    def involutions(self) -> list[InvolutionLabel]:
        """The h elements restricting nontrivially to k_p, labelled j = 1..h."""
        return [InvolutionLabel(j + 1, self.element(j, -1)) for j in range(self.G.h)]

    def involution(self, j: int) -> InvolutionLabel:
        if not 1 <= j <= self.G.h:
            raise DomainError(f"involution index j={j} out of range 1..{self.G.h} (h = {self.G.h})")
        return InvolutionLabel(j, self.element(j - 1, -1))

    def act(self, sigma: DihedralElement, c: int) -> int:
        """(gamma, +1) sends c to gamma c; (gamma, -1) sends c to gamma c^-1."""
        self._check(sigma)
        return self.G.mul(sigma.gamma, c if sigma.sign == 1 else self.G.inv(c))

    def fixed_heegner_classes(self, sigma: InvolutionLabel, method: str = "closed") -> list[int]:
        """Classes c with sigma(c) = c, i.e. c^2 = gamma.

        With h odd there is exactly one, gamma^((h+1)/2).  ``method="scan"``
        checks every class instead.
        """
        h = self.G.h
        if h % 2 == 0:
            raise DomainError(f"class number {h} is even")
        gamma = sigma.element.gamma
        if method == "closed":
            return [self.G.pow(gamma, (h + 1) // 2)]
        if method == "scan":
            return [c for c in range(h) if self.act(sigma.element, c) == c]
        raise DomainError(f"unknown method {method!r}")


def select_sigma(selector: SigmaSelector) -> dict[int, tuple[InvolutionLabel, HeegnerForm]]:
    """For each prime: the j-th involution and its unique fixed Heegner form (the set B_j)."""
    out = {}
    for fp in selector.primes:
        G = enumerate_class_group(fp.p)
        if selector.j > G.h:
            raise DomainError(f"j={selector.j} exceeds h={G.h} for p={fp.p}")
        D = DihedralGroup(G)
        label = D.involution(selector.j)
        (fixed,) = D.fixed_heegner_classes(label)
        forms = heegner_forms(fp.p, fp.certificate.N, group=G)
        out[fp.p] = (label, forms[fixed])
    return out
