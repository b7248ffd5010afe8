from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mhfexpand.errors import IdenticallyZero
from mhfexpand.scalar import (
    EpsLinear,
    EpsSeries,
    as_rational,
    eps_arith,
    format_rational,
    laurent_invert,
    parse_eps_linear,
    poch,
)

rationals = st.fractions(min_value=-20, max_value=20, max_denominator=12)


@st.composite
def series(draw, nonzero=False, trunc=6):
    lo = draw(st.integers(-3, 2))
    cs = draw(st.lists(rationals, min_size=1, max_size=4))
    if nonzero and cs[0] == 0:
        cs[0] = Fraction(1)
    return EpsSeries.from_coeffs(cs, lo, trunc)


def test_rational_normalized():
    q = as_rational("-6/4")
    assert (q.numerator, q.denominator) == (-3, 2)
    assert format_rational(Fraction(4, 2)) == "2"
    assert format_rational(Fraction(-3, 6)) == "-1/2"


@given(rationals, rationals, rationals, rationals.filter(lambda q: q != 0))
def test_rational_sum_matches_cross_multiplication(a, b, c, d):
    b = b or Fraction(1)
    lhs = a / b + c / d
    num = a.numerator * b.denominator * d.numerator * c.denominator + c.numerator * d.denominator * b.numerator * a.denominator
    den = a.denominator * b.numerator * c.denominator * d.numerator
    assert lhs == Fraction(num, den)


@pytest.mark.parametrize(
    "text,b0,b1",
    [("eps", 0, 1), ("2eps+1", 1, 2), ("4-eps", 4, -1), ("-eps-1/2", Fraction(-1, 2), -1), ("3/2", Fraction(3, 2), 0), ("eps-3/2", Fraction(-3, 2), 1)],
)
def test_parse_eps_linear(text, b0, b1):
    e = parse_eps_linear(text)
    assert (e.b0, e.b1) == (b0, b1)
    assert parse_eps_linear(str(e)) == e


def test_eps_linear_arithmetic():
    a = EpsLinear(1, 2)
    assert a + 1 == EpsLinear(2, 2)
    assert 1 - a == EpsLinear(0, -2)
    assert a.at(Fraction(1, 2)) == 2
    assert EpsLinear(0, 0).is_zero and EpsLinear(3).is_constant


def test_poch():
    assert poch(Fraction(3), 2) == 12
    assert poch(Fraction(1, 2), 3) == Fraction(15, 8)
    assert poch(Fraction(5), 0) == 1
    # (1/3)_{-2} = 1/((1/3-1)(1/3-2))
    assert poch(Fraction(1, 3), -2) == 1 / ((Fraction(1, 3) - 1) * (Fraction(1, 3) - 2))


def test_invert_monomial():
    r = laurent_invert(EpsSeries.monomial(1), 4)
    assert r.items() == [(-1, 1)]


def test_invert_geometric():
    r = laurent_invert(EpsSeries.from_coeffs([1, 1]), 5)
    assert [r.coefficient(k) for k in range(5)] == [1, -1, 1, -1, 1]


def test_invert_double_pole():
    s = EpsSeries.from_coeffs([-1, 1], 2)  # (eps-1) eps^2
    r = laurent_invert(s, 3)
    assert r.min_order == -2
    assert [r.coefficient(k) for k in range(-2, 3)] == [-1, -1, -1, -1, -1]
    prod = s * r
    assert prod.coefficient(0) == 1 and all(prod.coefficient(k) == 0 for k in range(1, prod.truncation))


def test_invert_zero_raises():
    with pytest.raises(IdenticallyZero):
        laurent_invert(EpsSeries.zero(3), 3)


def test_mul_examples():
    assert EpsSeries.monomial(-1) * EpsSeries.monomial(1) == EpsSeries.const(1)
    p = EpsSeries.from_coeffs([1, 1]) * EpsSeries.from_coeffs([1, -1])
    assert p.items() == [(0, 1), (2, -1)]
    assert eps_arith(EpsSeries.const(2), EpsSeries.const(3), "add") == EpsSeries.const(5)


def test_truncation_propagates_min():
    a = EpsSeries.from_coeffs([1, 2, 3], 0, 3)
    b = EpsSeries.from_coeffs([1], 0, 5)
    assert (a + b).truncation == 3
    assert (a * EpsSeries.from_coeffs([1], -1, 5)).truncation == 2


def test_serialization():
    s = EpsSeries.from_coeffs([Fraction(1, 3), -2], -1, 2)
    d = s.to_dict()
    assert d["coeffs"] == ["1/3", "-2"] and d["min_order"] == -1 and d["truncation"] == 2
    assert EpsSeries.from_dict(d) == s


@given(series(nonzero=True))
def test_inverse_property(s):
    r = laurent_invert(s, 6)
    assert r.min_order == -s.min_order
    prod = s * r
    for k in range(prod.truncation):
        assert prod.coefficient(k) == (1 if k == 0 else 0)


@given(series(), series(), series())
def test_ring_axioms(a, b, c):
    assert ((a * b) * c).equal_within(a * (b * c))
    assert (a * (b + c)).equal_within(a * b + a * c)
    assert ((a + b) - a).equal_within(b.truncate((a + b).truncation))


@given(series(), series())
def test_commutative(a, b):
    assert (a * b).equal_within(b * a)
    assert (a + b).equal_within(b + a)


@given(series(), rationals)
def test_evaluate_is_homomorphism_on_polynomials(a, e):
    a = EpsSeries.from_coeffs([a.coefficient(k) for k in range(max(0, a.min_order), a.truncation)], max(0, a.min_order))
    b = EpsSeries.from_coeffs([1, e])
    assert (a * b).evaluate(e) == a.evaluate(e) * b.evaluate(e)
