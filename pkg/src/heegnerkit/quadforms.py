"""Positive definite binary quadratic forms of discriminant -p.

The form class group of discriminant -p is isomorphic to Gal(H_p/k_p), and
the Heegner points of level N attached to k_p are in bijection with its
classes.  Classes are indexed by their reduced representative, ordered
lexicographically by (a, b); index 0 is always the principal form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

from . import arith
from .errors import DomainError, InternalError, ResourceError
from .prime_family import verify_hypothesis

DEFAULT_HEEGNER_BUDGET = 10**7


@dataclass(frozen=True, order=True)
class QuadForm:
    a: int
    b: int
    c: int

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    @property
    def is_reduced(self) -> bool:
        a, b, c = self.a, self.b, self.c
        if not (abs(b) <= a <= c):
            return False
        return b >= 0 if (abs(b) == a or a == c) else True

    def inverse(self) -> "QuadForm":
        return reduce(QuadForm(self.a, -self.b, self.c))

    def __iter__(self):
        return iter((self.a, self.b, self.c))

    def to_json(self) -> list[str]:
        return [str(self.a), str(self.b), str(self.c)]

    @classmethod
    def from_json(cls, obj) -> "QuadForm":
        return cls(*(int(x) for x in obj))


def reduce(f: QuadForm) -> QuadForm:
    """Unique reduced representative of the SL2(Z)-class of f."""
    a, b, c = f
    D = b * b - 4 * a * c
    if D >= 0 or a <= 0:
        raise DomainError(f"{f} is not positive definite")
    while True:
        # translate b into (-a, a]
        k = (a - b) // (2 * a)
        b += 2 * k * a
        c = (b * b - D) // (4 * a)
        if a > c:
            a, b, c = c, -b, a
            continue
        if a == c and b < 0:
            b = -b
        return QuadForm(a, b, c)


def reduced_forms(D: int) -> list[QuadForm]:
    """All primitive reduced forms of negative discriminant D, sorted by (a, b)."""
    if D >= 0 or D % 4 not in (0, 1):
        raise DomainError(f"{D} is not a negative discriminant")
    out = []
    a = 1
    while 3 * a * a <= -D:
        for b in range(-a + 1, a + 1):
            if (b - D) % 2:
                continue
            num = b * b - D
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            if math.gcd(math.gcd(a, b), c) == 1:
                out.append(QuadForm(a, b, c))
        a += 1
    return out


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """(g, x, y) with a x + b y = g = gcd(a, b) >= 0."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        return -a, -x0, -y0
    return a, x0, y0


def compose(f: QuadForm, g: QuadForm) -> QuadForm:
    """Gauss composition (Dirichlet's united forms); returns the reduced class."""
    D = f.disc
    if g.disc != D:
        raise DomainError(f"discriminant mismatch: {D} vs {g.disc}")
    a1, b1, _ = f
    a2, b2, _ = g
    s = (b1 + b2) // 2
    d0, x0, y0 = _xgcd(a1, a2)
    e, u, z = _xgcd(d0, s)
    x, y = u * x0, u * y0  # x a1 + y a2 + z s = e
    a3 = a1 * a2 // (e * e)
    b3 = (x * a1 * b2 + y * a2 * b1 + z * (b1 * b2 + D) // 2) // e
    b3 %= 2 * a3
    c3 = (b3 * b3 - D) // (4 * a3)
    return reduce(QuadForm(a3, b3, c3))


def principal_form(D: int) -> QuadForm:
    return QuadForm(1, D % 2, (D % 2 - D) // 4)


class FormClassGroup:
    """Class group of discriminant -p with a polycyclic presentation.

    Elements are indices into ``forms``.  The presentation (generators g_i
    with relative orders m_i and relations g_i^m_i = word in g_1..g_{i-1})
    makes multiplication pure integer arithmetic on exponent vectors; the
    test suite cross-checks it against :func:`compose`.
    """

    def __init__(self, disc: int, forms: list[QuadForm]):
        self.disc = disc
        self.forms = forms
        self.h = len(forms)
        self._index = {(f.a, f.b): i for i, f in enumerate(forms)}
        self._build_presentation()

    def index(self, f: QuadForm) -> int:
        r = f if f.is_reduced else reduce(f)
        if r.disc != self.disc:
            raise DomainError(f"{f} has discriminant {r.disc}, group has {self.disc}")
        return self._index[(r.a, r.b)]

    @property
    def identity(self) -> int:
        return 0

    def _build_presentation(self) -> None:
        ident = self.forms[0]
        if ident != principal_form(self.disc):
            raise InternalError("first reduced form is not principal")
        # element (as form) -> exponent vector
        vec: dict[QuadForm, tuple[int, ...]] = {ident: ()}
        gens: list[QuadForm] = []
        orders: list[int] = []
        relations: list[tuple[int, ...]] = []
        for f in self.forms:
            if f in vec:
                continue
            powers = [ident, f]
            while powers[-1] not in vec:
                powers.append(compose(powers[-1], f))
            m = len(powers) - 1
            rel = vec[powers[-1]]
            new = {}
            for x, v in vec.items():
                for e in range(m):
                    y = x if e == 0 else compose(x, powers[e])
                    new[y] = v + (e,)
            vec = new
            gens.append(f)
            orders.append(m)
            relations.append(rel)
        if len(vec) != self.h:
            raise InternalError(f"presentation covers {len(vec)} of {self.h} classes")
        width = len(gens)
        self.generators = gens
        self.relative_orders = tuple(orders)
        self._relations = [r + (0,) * (width - len(r)) for r in relations]
        self._vec = [vec[f] for f in self.forms]
        self._from_vec = {v: i for i, v in enumerate(self._vec)}

    def _normalize(self, w: list[int]) -> tuple[int, ...]:
        for k in range(len(w) - 1, -1, -1):
            q, w[k] = divmod(w[k], self.relative_orders[k])
            if q:
                rel = self._relations[k]
                for i in range(k):
                    w[i] += q * rel[i]
        return tuple(w)

    def mul(self, i: int, j: int) -> int:
        w = [x + y for x, y in zip(self._vec[i], self._vec[j])]
        return self._from_vec[self._normalize(w)]

    def inv(self, i: int) -> int:
        return self._from_vec[self._normalize([-x for x in self._vec[i]])]

    def pow(self, i: int, n: int) -> int:
        if n < 0:
            i, n = self.inv(i), -n
        result, base = self.identity, i
        while n:
            if n & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            n >>= 1
        return result

    def order(self, i: int) -> int:
        n, x = 1, i
        while x != self.identity:
            x = self.mul(x, i)
            n += 1
        return n

    @cached_property
    def structure(self) -> tuple[int, ...]:
        """Invariant factors d_1 | d_2 | ... with product h (empty when h = 1).

        For each prime power ell^e exactly dividing h, the sizes of the
        ell^k-torsion subgroups determine how many cyclic factors have
        exponent >= k.
        """
        primary: list[list[int]] = []
        for ell, e in (arith.factorize(self.h) if self.h > 1 else {}).items():
            counts = [1]
            current = list(range(self.h))
            for _ in range(e):
                current = [self.pow(x, ell) for x in current]
                counts.append(current.count(self.identity))
            ranks = []
            for k in range(1, e + 1):
                ratio, r = counts[k] // counts[k - 1], 0
                while ratio > 1:
                    ratio //= ell
                    r += 1
                ranks.append(r)
            ranks.append(0)
            exps = []
            for k in range(1, e + 1):
                exps += [ell**k] * (ranks[k - 1] - ranks[k])
            primary.append(sorted(exps, reverse=True))
        width = max((len(x) for x in primary), default=0)
        factors = [math.prod(x[col] for x in primary if col < len(x)) for col in range(width)]
        return tuple(sorted(factors))

    def __repr__(self) -> str:
        return f"FormClassGroup(disc={self.disc}, h={self.h}, structure={self.structure})"


def enumerate_class_group(p: int) -> FormClassGroup:
    """Class group of Q(sqrt(-p)) for a prime p = 3 mod 4."""
    if p % 4 != 3 or not arith.is_prime(p):
        raise DomainError(f"need a prime p = 3 mod 4, got {p}")
    G = FormClassGroup(-p, reduced_forms(-p))
    if G.h % 2 == 0:
        raise InternalError(f"even class number {G.h} for p = {p}")
    return G


def class_number(p: int) -> int:
    """h(-p) by counting reduced forms (no group structure)."""
    if p % 4 != 3:
        raise DomainError(f"need p = 3 mod 4, got {p}")
    return len(reduced_forms(-p))


@dataclass(frozen=True)
class HeegnerForm:
    """A form (a, b, c) of discriminant -p with N | a and b = beta (mod 2N)."""

    form: QuadForm
    beta: int
    N: int
    class_index: int

    def to_json(self) -> dict:
        return {
            "form": self.form.to_json(),
            "beta": str(self.beta),
            "N": str(self.N),
            "class_index": self.class_index,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "HeegnerForm":
        return cls(QuadForm.from_json(obj["form"]), int(obj["beta"]), int(obj["N"]), int(obj["class_index"]))


def heegner_beta(p: int, N: int) -> int:
    """Canonical beta in [0, 2N) with beta^2 = -p (mod 4N): the smallest one."""
    roots = arith.sqrt_mod(-p, 4 * N)
    if not roots:
        raise InternalError(f"-{p} is not a square modulo {4 * N} although the hypothesis holds")
    return min(r % (2 * N) for r in roots)


def heegner_forms(
    p: int, N: int, group: FormClassGroup | None = None, budget: int = DEFAULT_HEEGNER_BUDGET
) -> list[HeegnerForm]:
    """One Heegner form per class, each with the smallest possible a (largest Im tau).

    Candidates (a, b) with a = N k and b = beta (mod 2N), -a < b <= a, are
    scanned in increasing k; each is reduced to find its class.  Among the
    candidates of minimal a for a class, a reduced form is preferred, then
    the smallest |b| and nonnegative b.
    """
    if not verify_hypothesis(p, N).valid:
        raise DomainError(f"Heegner hypothesis fails for p={p}, N={N}")
    G = group or enumerate_class_group(p)
    beta = heegner_beta(p, N)
    found: dict[int, HeegnerForm] = {}
    steps = 0
    k = 0
    while len(found) < G.h:
        k += 1
        a = N * k
        best: dict[int, QuadForm] = {}
        b = -a + 1 + (beta - (-a + 1)) % (2 * N)
        while b <= a:
            steps += 1
            num = b * b + p
            if num % (4 * a) == 0:
                f = QuadForm(a, b, num // (4 * a))
                idx = G.index(f)
                if idx not in found:
                    cur = best.get(idx)
                    if cur is None or _preference(f) < _preference(cur):
                        best[idx] = f
            b += 2 * N
        for idx, f in best.items():
            found[idx] = HeegnerForm(f, beta, N, idx)
        if steps > budget:
            raise ResourceError(f"Heegner form search exceeded {budget} steps at a = {a}")
    return [found[i] for i in range(G.h)]


def _preference(f: QuadForm) -> tuple:
    return (not f.is_reduced, abs(f.b), f.b < 0)
