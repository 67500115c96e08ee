import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from heegnerkit.errors import DomainError
from heegnerkit.quadforms import (
    FormClassGroup,
    HeegnerForm,
    QuadForm,
    class_number,
    compose,
    enumerate_class_group,
    heegner_beta,
    heegner_forms,
    principal_form,
    reduce,
    reduced_forms,
)

PRIMES_3MOD4 = [p for p in oracles.sieve(3000) if p % 4 == 3]


def represented(f: QuadForm, bound: int) -> set[int]:
    a, b, c = f
    r = math.isqrt(4 * bound) + 2
    out = set()
    for x, y in itertools.product(range(-r, r + 1), repeat=2):
        if math.gcd(x, y) == 1:
            v = a * x * x + b * x * y + c * y * y
            if 0 < v <= bound:
                out.add(v)
    return out


def brute_reduced(D: int) -> list[QuadForm]:
    """Every primitive (a, b, c) with b^2 - 4ac = D satisfying the reduction inequalities."""
    out = []
    for a in range(1, -D + 1):
        for b in range(-a + 1, a + 1):
            if (b * b - D) % (4 * a):
                continue
            c = (b * b - D) // (4 * a)
            f = QuadForm(a, b, c)
            if c >= a and math.gcd(math.gcd(a, b), c) == 1 and f.is_reduced:
                out.append(f)
    return sorted(out)


@pytest.mark.parametrize("p", [7, 23, 31, 47, 71, 79, 103, 199])
def test_reduced_forms_exhaustive(p):
    assert reduced_forms(-p) == brute_reduced(-p)


@pytest.mark.parametrize("p,h", [(7, 1), (23, 3), (47, 5), (71, 7), (3, 1), (887, 29)])
def test_class_number_spot_values(p, h):
    assert class_number(p) == h


def test_class_number_matches_dirichlet_formula():
    for p in PRIMES_3MOD4:
        if p > 3:
            assert class_number(p) == oracles.class_number_dirichlet(p), p


def test_reduce_is_canonical():
    assert reduce(QuadForm(37, 17, 2)) == QuadForm(1, 1, 2)
    assert reduce(QuadForm(2, 1, 1)) == QuadForm(1, 1, 2)
    assert reduce(QuadForm(3, -3, 1)).is_reduced
    with pytest.raises(DomainError):
        reduce(QuadForm(1, 3, 1))


@settings(max_examples=200)
@given(
    st.sampled_from(PRIMES_3MOD4[1:60]),
    st.integers(-5, 5),
    st.integers(-5, 5),
    st.integers(-5, 5),
    st.integers(-5, 5),
)
def test_reduce_invariant_under_sl2z(p, x, y, z, w):
    if x * w - y * z != 1:
        return
    for f in reduced_forms(-p):
        a, b, c = f
        # f(x X + y Y, z X + w Y)
        a2 = a * x * x + b * x * z + c * z * z
        b2 = 2 * a * x * y + b * (x * w + y * z) + 2 * c * z * w
        c2 = a * y * y + b * y * w + c * w * w
        g = QuadForm(a2, b2, c2)
        if a2 > 0:
            assert reduce(g) == f


@pytest.mark.parametrize("p", [23, 47, 71, 199, 887])
def test_compose_represents_products(p):
    forms = reduced_forms(-p)
    bound = 60
    reps = {f: represented(f, bound) for f in forms}
    for f, g in itertools.product(forms[:4], repeat=2):
        fg = compose(f, g)
        big = represented(fg, bound * bound)
        for m in reps[f]:
            for n in reps[g]:
                if math.gcd(m, n) == 1:
                    assert m * n in big


@pytest.mark.parametrize("p", PRIMES_3MOD4[1:40] + [887, 3299, 4027])
def test_group_axioms_and_table_matches_compose(p):
    G = enumerate_class_group(p)
    assert G.forms[0] == principal_form(-p)
    idx = range(G.h)
    for i in idx:
        assert G.mul(i, G.identity) == i
        assert G.mul(i, G.inv(i)) == G.identity
        assert G.forms[G.inv(i)] == G.forms[i].inverse()
    sample = list(idx)[:12]
    for i, j in itertools.product(sample, repeat=2):
        assert G.forms[G.mul(i, j)] == compose(G.forms[i], G.forms[j])
        assert G.mul(i, j) == G.mul(j, i)
        for k in sample[:4]:
            assert G.mul(G.mul(i, j), k) == G.mul(i, G.mul(j, k))


def test_pow_and_order():
    G = enumerate_class_group(887)
    assert G.structure == (29,)
    for i in range(1, G.h):
        assert G.order(i) == 29
        assert G.pow(i, 29) == G.identity
        assert G.pow(i, -1) == G.inv(i)


@pytest.mark.parametrize("p,structure", [(3299, (3, 9)), (4027, (3, 3)), (23, (3,)), (7, ())])
def test_structure(p, structure):
    G = enumerate_class_group(p)
    assert G.structure == structure
    assert math.prod(structure) == G.h
    # element orders bounded by the exponent
    exponent = structure[-1] if structure else 1
    assert max(G.order(i) for i in range(G.h)) == exponent


def test_enumerate_rejects_bad_input():
    with pytest.raises(DomainError):
        enumerate_class_group(41)
    with pytest.raises(DomainError):
        enumerate_class_group(15)


def test_h_odd_below_10000():
    for p in oracles.sieve(10000):
        if p % 4 == 3:
            assert class_number(p) % 2 == 1


# ---------------------------------------------------------------------------
# Heegner forms


@pytest.mark.parametrize("p,N", [(7, 37), (887, 37), (2663, 37), (23, 1), (71, 1), (71, 43), (7, 11), (239, 11), (199, 61)])
def test_heegner_forms(p, N):
    G = enumerate_class_group(p)
    forms = heegner_forms(p, N, group=G)
    beta = heegner_beta(p, N)
    assert (beta * beta + p) % (4 * N) == 0 and 0 <= beta < 2 * N
    assert len(forms) == G.h
    for i, hf in enumerate(forms):
        f = hf.form
        assert f.disc == -p
        assert f.a % N == 0
        assert (f.b - beta) % (2 * N) == 0
        assert hf.class_index == i and G.index(f) == i
        # no smaller multiple of N reaches the same class
        for k in range(1, f.a // N):
            a = N * k
            for b in range(-a + 1, a + 1):
                if (b - beta) % (2 * N) == 0 and (b * b + p) % (4 * a) == 0:
                    assert G.index(QuadForm(a, b, (b * b + p) // (4 * a))) != i


def test_heegner_forms_level_one_are_reduced():
    G = enumerate_class_group(199)
    assert [hf.form for hf in heegner_forms(199, 1, group=G)] == G.forms


def test_heegner_p7_level_37():
    (hf,) = heegner_forms(7, 37)
    assert hf.form == QuadForm(37, 17, 2) and hf.beta == 17


def test_heegner_hypothesis_failure():
    with pytest.raises(DomainError):
        heegner_forms(23, 37)


def test_heegner_form_json():
    hf = heegner_forms(887, 37)[5]
    assert HeegnerForm.from_json(hf.to_json()) == hf


def test_form_json_and_group_repr():
    f = QuadForm(2, -1, 3)
    assert QuadForm.from_json(f.to_json()) == f
    assert "h=3" in repr(FormClassGroup(-23, reduced_forms(-23)))
