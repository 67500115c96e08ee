"""Elliptic curves over Q in long Weierstrass form with a declared conductor."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

from . import arith
from .errors import DomainError


@dataclass(frozen=True)
class CurveSpec:
    """y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6, assumed minimal.

    The conductor is an input, never computed; loading only checks that its
    primes divide the discriminant.
    """

    a1: int
    a2: int
    a3: int
    a4: int
    a6: int
    conductor: int
    label: str = ""

    def __post_init__(self):
        if self.discriminant == 0:
            raise DomainError(f"singular Weierstrass model {self.ainvs}")
        if self.conductor < 1:
            raise DomainError("conductor must be >= 1")
        for q in arith.factorize(self.conductor) if self.conductor > 1 else ():
            if self.discriminant % q:
                raise DomainError(f"conductor prime {q} does not divide the discriminant {self.discriminant}")
        if not self.label:
            object.__setattr__(self, "label", "[" + ",".join(map(str, self.ainvs)) + f"]/N={self.conductor}")

    @property
    def ainvs(self) -> tuple[int, int, int, int, int]:
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    @cached_property
    def b_invariants(self) -> tuple[int, int, int, int]:
        a1, a2, a3, a4, a6 = self.ainvs
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        return b2, b4, b6, b8

    @cached_property
    def c_invariants(self) -> tuple[int, int]:
        b2, b4, b6, _ = self.b_invariants
        return b2 * b2 - 24 * b4, -b2**3 + 36 * b2 * b4 - 216 * b6

    @cached_property
    def discriminant(self) -> int:
        b2, b4, b6, b8 = self.b_invariants
        return -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6

    @cached_property
    def bad_primes(self) -> tuple[int, ...]:
        return tuple(arith.factorize(self.conductor)) if self.conductor > 1 else ()

    def contains(self, x, y) -> bool:
        """Exact membership test for rational (or integer) coordinates."""
        a1, a2, a3, a4, a6 = self.ainvs
        return y * y + a1 * x * y + a3 * y == x**3 + a2 * x * x + a4 * x + a6

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "a1": str(self.a1),
            "a2": str(self.a2),
            "a3": str(self.a3),
            "a4": str(self.a4),
            "a6": str(self.a6),
            "conductor": str(self.conductor),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CurveSpec":
        try:
            return cls(
                *(int(obj[k]) for k in ("a1", "a2", "a3", "a4", "a6")),
                conductor=int(obj["conductor"]),
                label=str(obj.get("label", "")),
            )
        except KeyError as exc:
            raise DomainError(f"curve object missing field {exc}") from None


# Small corpus of optimal curves used throughout the tests and CLI examples.
KNOWN_CURVES = {
    "11a1": CurveSpec(0, -1, 1, -10, -20, 11, "11a1"),
    "37a1": CurveSpec(0, 0, 1, -1, 0, 37, "37a1"),
    "43a1": CurveSpec(0, 1, 1, 0, 0, 43, "43a1"),
    "61a1": CurveSpec(1, 0, 0, -2, 1, 61, "61a1"),
    "389a1": CurveSpec(0, 1, 1, -2, 0, 389, "389a1"),
}


def parse_curve(text: str) -> CurveSpec:
    """Accept a known label, an inline ``a1,a2,a3,a4,a6,N`` or a JSON object / file."""
    text = text.strip()
    if text in KNOWN_CURVES:
        return KNOWN_CURVES[text]
    if text.startswith("{"):
        return CurveSpec.from_json(json.loads(text))
    path = Path(text)
    if path.suffix == ".json" and path.exists():
        return CurveSpec.from_json(json.loads(path.read_text()))
    parts = [s.strip() for s in text.split(",")]
    if len(parts) != 6:
        raise DomainError(f"cannot parse curve {text!r}: expected label, JSON or 'a1,a2,a3,a4,a6,N'")
    try:
        nums = [int(s) for s in parts]
    except ValueError:
        raise DomainError(f"non-integer coefficient in {text!r}") from None
    return CurveSpec(*nums[:5], conductor=nums[5])
