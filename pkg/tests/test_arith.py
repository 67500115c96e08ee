import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from heegnerkit import arith
from heegnerkit.errors import DomainError

PRIMES_BELOW_20000 = oracles.sieve(20000)


@pytest.mark.parametrize("a,n,expected", [(1, 5, 1), (-7, 2, 1), (-887, 37, 1)])
def test_kronecker_examples(a, n, expected):
    assert arith.kronecker(a, n) == expected


def test_kronecker_minus_887_37_by_squaring():
    assert (-887) % 37 in {(x * x) % 37 for x in range(37)}


def test_kronecker_zero_modulus():
    with pytest.raises(DomainError):
        arith.kronecker(3, 0)


@given(st.integers(-500, 500), st.integers(-300, 300).filter(lambda n: n != 0))
def test_kronecker_matches_definition(a, n):
    assert arith.kronecker(a, n) == oracles.kronecker(a, n)


@given(st.integers(-200, 200), st.integers(-200, 200), st.integers(1, 200))
def test_kronecker_multiplicative_top(a, b, n):
    assert arith.kronecker(a * b, n) == arith.kronecker(a, n) * arith.kronecker(b, n)


@given(st.integers(-200, 200), st.integers(1, 200), st.integers(1, 200))
def test_kronecker_multiplicative_bottom(a, m, n):
    assert arith.kronecker(a, m * n) == arith.kronecker(a, m) * arith.kronecker(a, n)


def test_is_prime_matches_sieve():
    primes = set(PRIMES_BELOW_20000)
    assert [n for n in range(20001) if arith.is_prime(n)] == sorted(primes)


@pytest.mark.parametrize("n,expected", [(1, False), (887, True), (295, False), (0, False), (2, True)])
def test_is_prime_examples(n, expected):
    assert arith.is_prime(n) is expected


def test_is_prime_887_trial_division():
    assert all(887 % d for d in range(2, math.isqrt(887) + 1))


@pytest.mark.parametrize(
    "n,expected",
    [
        (561, False),  # Carmichael
        (3215031751, False),  # strong pseudoprime to bases 2, 3, 5, 7
        (2**61 - 1, True),
        (2**89 - 1, True),
        (2**67 - 1, False),  # 193707721 * 761838257287
        (193707721 * 761838257287, False),
        ((2**64 - 59), True),
        (2**127 - 1, True),
        ((2**61 - 1) * (2**89 - 1), False),
    ],
)
def test_is_prime_large(n, expected):
    assert arith.is_prime(n) is expected


def test_next_prime():
    assert arith.next_prime(886) == 887
    assert arith.next_prime(887) == 907


@pytest.mark.parametrize(
    "pairs,expected", [([(1, 2), (1, 3)], 1), ([(7, 8), (36, 37)], 295), ([(0, 5)], 0)]
)
def test_crt_examples(pairs, expected):
    assert arith.crt(pairs) == expected


def test_crt_non_coprime():
    with pytest.raises(DomainError):
        arith.crt([(1, 4), (3, 6)])


@given(st.lists(st.sampled_from(PRIMES_BELOW_20000[:40]), min_size=1, max_size=5, unique=True), st.data())
def test_crt_reduces_correctly(moduli, data):
    pairs = [(data.draw(st.integers(-10**6, 10**6)), m) for m in moduli]
    x = arith.crt(pairs)
    assert 0 <= x < math.prod(moduli)
    assert all((x - r) % m == 0 for r, m in pairs)


@given(st.integers(1, 10**9))
def test_factorize_roundtrip(n):
    f = arith.factorize(n)
    assert math.prod(p**e for p, e in f.items()) == n
    assert all(arith.is_prime(p) for p in f)


@settings(max_examples=60)
@given(st.integers(-400, 400), st.integers(1, 400))
def test_sqrt_mod_matches_exhaustive(a, m):
    assert arith.sqrt_mod(a, m) == [x for x in range(m) if (x * x - a) % m == 0]


def test_valuation():
    assert arith.valuation(-1776, 2) == 4
    with pytest.raises(DomainError):
        arith.valuation(0, 3)


@given(st.floats(-1e30, 1e30, allow_nan=False), st.floats(-1e30, 1e30, allow_nan=False))
def test_prec_add_sub_roundtrip(x, y):
    ctx = arith.context(256)
    a = ctx.mpf(x) * ctx.pi
    b = ctx.mpf(y) * ctx.e
    got = (a + b) - b
    scale = max(abs(a), abs(b), ctx.mpf(2) ** -1000)
    assert abs(got - a) <= ctx.ldexp(scale, -256 + 4)


@given(st.integers(-(2**300), 2**300), st.integers(-400, 400))
def test_hex_float_roundtrip(man, exp):
    ctx = arith.context(256)
    x = ctx.ldexp(ctx.mpf(man), exp)
    assert arith.hex_to_mpf(arith.mpf_to_hex(x), ctx) == x


def test_hex_complex_roundtrip_and_sign():
    ctx = arith.context(128)
    z = ctx.mpc(-ctx.pi, ctx.e)
    enc = arith.mpc_to_hex(z)
    assert enc["re"].startswith("-0x")
    assert arith.hex_to_mpc(enc, ctx) == z


def test_contexts_are_independent():
    lo, hi = arith.context(64), arith.context(512)
    assert lo.prec == 64 and hi.prec == 512
    assert abs(hi.pi - lo.pi) > 0


def test_mpf_parts_exact():
    ctx = arith.context(256)
    rng = random.Random(5)
    for _ in range(50):
        x = ctx.mpf(rng.uniform(-1e6, 1e6)) / 3
        man, exp = arith.mpf_parts(x)
        assert ctx.ldexp(man, exp) == x
