import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from padic_ift import PadicScalar, arith, norm, padic
from padic_ift.errors import DivisionByZeroAtPrecision, ParseError, PrimeMismatch

from oracles import pnorm, vp

PRIMES = [2, 3, 5, 7, 11]


def test_three_plus_four_is_seven_in_q7():
    s = arith(padic(3, 7), padic(4, 7), "add")
    assert s.val == 1 and s.unit == 1


def test_half_in_q7_has_digits_4_3_3():
    half = arith(padic(1, 7), padic(2, 7), "div")
    assert half.digits()[:5] == [4, 3, 3, 3, 3]
    # independent check: the unit part times 2 is 1 mod 7^N
    assert (2 * half.unit) % 7**half.precision == 1


def test_multiplying_by_zero_sets_zero_flag():
    for x in [1, 5, Fraction(2, 3), 125]:
        assert (padic(x, 5) * padic(0, 5)).is_zero


def test_norm_examples():
    assert norm(padic(49, 7)) == Fraction(1, 49)
    assert norm(padic(Fraction(3, 7), 7)) == 7
    assert norm(padic(0, 7)) == 0


def test_norm_is_multiplicative_on_random_pairs():
    rng = random.Random(0)
    for _ in range(200):
        x = Fraction(rng.randrange(1, 10**6), rng.randrange(1, 10**3))
        y = Fraction(rng.randrange(1, 10**6), rng.randrange(1, 10**3))
        assert norm(padic(x, 7) * padic(y, 7)) == pnorm(x, 7) * pnorm(y, 7)


def test_prime_mismatch_and_division_by_zero():
    with pytest.raises(PrimeMismatch):
        arith(padic(1, 5), padic(1, 7), "add")
    with pytest.raises(DivisionByZeroAtPrecision):
        arith(padic(1, 7), padic(7**40, 7), "div")


def test_division_by_non_unit_consumes_digits():
    q = padic(1, 7, 10) / padic(49, 7, 10)
    assert q.val == -2
    assert q.relative_precision == 8


def test_text_and_json_round_trip():
    x = padic(Fraction(22, 7), 7, 8)
    assert str(x).startswith("7^-1 * (")
    assert PadicScalar.parse(str(x)) == x
    assert PadicScalar.from_json(x.to_json()) == x
    z = padic(0, 5, 6)
    assert PadicScalar.parse(str(z)).is_zero
    with pytest.raises(ParseError):
        PadicScalar.parse("not a number")


@st.composite
def integers_mod(draw, p=None, N=6):
    p = p or draw(st.sampled_from(PRIMES))
    return p, N, draw(st.integers(0, p**N - 1)), draw(st.integers(0, p**N - 1))


@given(integers_mod())
def test_ultrametric_law(args):
    p, N, a, b = args
    x, y = padic(a, p, N), padic(b, p, N)
    s = x + y
    assert s.norm() <= max(x.norm(), y.norm())
    if x.norm() != y.norm():
        assert s.norm() == max(x.norm(), y.norm())


@given(integers_mod())
def test_ring_operations_match_integers_mod_pN(args):
    p, N, a, b = args
    x, y = padic(a, p, N), padic(b, p, N)
    mod = p**N
    assert (x + y).residue(N) == (a + b) % mod
    assert (x - y).residue(N) == (a - b) % mod
    assert (x * y).residue(N) == (a * b) % mod
    assert (x * x * y - y).residue(N) == (a * a * b - b) % mod


@given(st.sampled_from(PRIMES), st.integers(1, 8), st.data())
def test_digit_round_trip(p, N, data):
    n = data.draw(st.integers(0, p**N - 1))
    x = padic(n, p, N)
    if n == 0:
        assert x.is_zero
        return
    assert x.val == vp(n, p)
    back = PadicScalar.from_digits(p, x.val, x.digits(), N)
    assert back.residue(N) == n


@settings(max_examples=50)
@given(st.sampled_from(PRIMES), st.integers(1, 10**6), st.integers(1, 10**6))
def test_rational_division_matches_modular_inverse(p, a, b):
    if b % p == 0:
        b += 1
    q = padic(a, p, 10) / padic(b, p, 10)
    assert (q * b).residue(max(q.precision, 0)) == a % p ** max(q.precision, 0)


def test_unit_coprime_to_prime():
    rng = random.Random(1)
    for _ in range(100):
        x = padic(Fraction(rng.randrange(1, 10**8), rng.randrange(1, 10**4)), 5, 12)
        assert x.is_zero or x.unit % 5 != 0
