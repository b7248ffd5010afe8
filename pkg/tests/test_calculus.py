from __future__ import annotations

from fractions import Fraction

import mpmath
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from mhfexpand.calculus import (
    EpsExpansion,
    arg_derivative,
    eps_derivative,
    mhf_param_derivative,
    poch_derivative_series,
    taylor_expand,
    taylor_expand_terms,
    theta_apply,
)
from mhfexpand.errors import NotNormalized, SingularLower
from mhfexpand.mhf import MHF, PochFactor, Term, canonical_form
from mhfexpand.numeval import eval_expansion, eval_mhf, eval_term
from mhfexpand.scalar import EpsLinear, EpsSeries, parse_eps_linear, poch

from conftest import mpq

E = parse_eps_linear
F = Fraction


def gauss2f1(a, b, c) -> MHF:
    return MHF(("x",), [(E(a), (1,)), (E(b), (1,))], [(E(c), (1,))])


@pytest.fixture(autouse=True)
def _mp_precision():
    with mpmath.workdps(40):
        yield


def num(terms, point, n=60, prec=128):
    return mpmath.fsum(mpmath.mpmathify(eval_term(t, point, n, "float", prec)) for t in terms)


# Pochhammer derivative ------------------------------------------------------


def test_poch_derivative_2eps_plus_1():
    d = poch_derivative_series(E("2eps+1"), 0)
    assert 2 * d.value(F(1), 3) == 22


def test_poch_derivative_trivial():
    d = poch_derivative_series(E("1"), 0)
    assert d.value(F(1), 1) == 1
    assert d.value(F(5), 0) == 0


@given(st.fractions(min_value=F(1, 9), max_value=6, max_denominator=9), st.integers(0, 10))
def test_psi_consistency(a, n):
    d = poch_derivative_series(EpsLinear(a), 0).value(a, n) / poch(a, n)
    ref = mpmath.digamma(mpq(a) + n) - mpmath.digamma(mpq(a))
    assert abs(mpq(d) - ref) < 1e-12 * max(1, abs(ref))


# parameter derivatives ------------------------------------------------------


def test_param_derivative_log_closed_form():
    m = MHF(("x",), [(E("1"), (1,))])
    terms = mhf_param_derivative(Term.of(m), "num", 0)
    assert all(t.mhf.fold == 2 for t in terms)
    assert abs(num(terms, {"x": F(1, 2)}, 90) - 2 * mpmath.log(2)) < 1e-20


def test_param_derivative_needs_normal_form():
    m = MHF(("x",), [(E("1"), (2,))])
    with pytest.raises(NotNormalized):
        mhf_param_derivative(Term.of(m), "num", 0)


def test_param_derivative_empty_form():
    m = MHF(("x",), [(E("1"), (0,)), (E("2"), (1,))])
    assert mhf_param_derivative(Term.of(m), "num", 0) == []


def test_denominator_derivative_matches_digamma():
    # d/dc 2F1(1,1;c;x) = -sum (1)_n^2/(c)_n (psi(c+n)-psi(c)) x^n/n!
    c, x = mpmath.mpf(5) / 2, mpmath.mpf(1) / 3
    m = gauss2f1("1", "1", "5/2")
    terms = mhf_param_derivative(Term.of(m), "den", 0, 4)
    ref = -mpmath.nsum(lambda n: mpmath.rf(1, n) ** 2 / mpmath.rf(c, n) * (mpmath.digamma(c + n) - mpmath.digamma(c)) * x**n / mpmath.factorial(n), [0, mpmath.inf])
    assert abs(num(terms, {"x": F(1, 3)}, 80) - ref) < 1e-18


def test_eps_derivative_free():
    assert eps_derivative(Term.of(gauss2f1("1", "2", "3"))) == []


def test_eps_derivative_coefficient_product_rule():
    f = gauss2f1("1", "2", "3")
    out = eps_derivative(Term(EpsSeries.monomial(1), (), f))
    assert out == [Term.of(canonical_form(f))]


def test_eps_derivative_gauss_half_integer():
    e = taylor_expand(gauss2f1("3", "2", "eps-3/2"), 1)
    v = eval_expansion(e, {"x": F(3, 10)}, 200, "float", 128)
    assert abs(float(v[1]) - (-38.7907)) < 5e-4 * 38.7907


# Taylor expansion -----------------------------------------------------------


def test_taylor_eps_free():
    f = gauss2f1("1", "2", "3")
    e = taylor_expand(f, 3)
    assert e.orders == {0: (Term.of(canonical_form(f)),)}


def test_taylor_gauss_dilog():
    e = taylor_expand(gauss2f1("eps", "-eps", "eps+1"), 2)
    assert [str(t) for t in e.terms(0)] == ["1"]
    assert e.terms(1) == ()
    # order 2 is -x 3F2(1,1,1;2,2;x) = -Li2(x)
    v = eval_expansion(e, {"x": F(1, 10)}, 80, "float", 128)
    assert abs(mpmath.mpmathify(v[2]) + mpmath.polylog(2, mpmath.mpf(1) / 10)) < 1e-30


def test_taylor_order2_is_x_3f2():
    e = taylor_expand(gauss2f1("eps", "-eps", "eps+1"), 2)
    x3f2 = Term(EpsSeries.const(-1), (("x", 1),), MHF(("x",), [(E("1"), (1,))] * 3, [(E("2"), (1,))] * 2))
    pt = {"x": F(1, 4)}
    assert abs(num(e.terms(2), pt, 60) - num([x3f2], pt, 60)) < 1e-30


def test_taylor_rejects_singular():
    with pytest.raises(SingularLower):
        taylor_expand(gauss2f1("eps", "-eps", "eps-1"), 1)


# argument derivatives and Euler operators -----------------------------------


def test_arg_derivative_gauss():
    out = arg_derivative(Term.of(gauss2f1("1", "1", "2")), "x")
    x = mpmath.mpf(1) / 3
    ref = mpmath.diff(lambda z: mpmath.hyp2f1(1, 1, 2, z), x)
    assert abs(num(out, {"x": F(1, 3)}, 120) - ref) < 1e-25
    # (ab/c) 2F1(a+1,b+1;c+1;x)
    assert len(out) == 1 and out[0].coeff == EpsSeries.const(F(1, 2))


def test_arg_derivative_constant():
    assert arg_derivative(Term.of(MHF(())), "x") == []


def test_arg_derivative_product_rule():
    f = gauss2f1("1", "2", "3")
    t = Term.of(f, monomial={"x": 2})
    out = arg_derivative(t, "x")
    pt = {"x": F(1, 5)}
    parts = [Term.of(f, 2, {"x": 1})] + [u.times_monomial("x", 2) for u in arg_derivative(Term.of(f), "x")]
    assert abs(num(out, pt, 80) - num(parts, pt, 80)) < 1e-30


def test_theta_constant():
    assert theta_apply(Term.of(MHF(())), "x") == []


def test_theta_is_x_times_derivative():
    t = Term.of(gauss2f1("1/2", "2", "7/3"))
    pt = {"x": F(1, 4)}
    lhs = num(theta_apply(t, "x"), pt, 80)
    rhs = num([u.times_monomial("x") for u in arg_derivative(t, "x")], pt, 80)
    assert lhs == rhs


def test_contiguous_step():
    # (theta + c) 2F1(a,b;c+1;x) = c 2F1(a,b;c;x) at a=1, b=2, c=3
    up = Term.of(gauss2f1("1", "2", "4"))
    lhs = num(theta_apply(up, "x") + [Term.of(up.mhf, 3)], {"x": F(1, 4)}, 90)
    rhs = 3 * num([Term.of(gauss2f1("1", "2", "3"))], {"x": F(1, 4)}, 90)
    assert abs(lhs - rhs) < 1e-30


# properties -----------------------------------------------------------------


@st.composite
def eps_mhf(draw):
    r = draw(st.integers(1, 2))
    names = ("x", "y")[:r]
    b0 = st.fractions(min_value=F(1, 3), max_value=3, max_denominator=3)
    b1 = st.sampled_from([F(0), F(1), F(-1), F(2), F(1, 2)])
    form = st.lists(st.integers(0, 1), min_size=r, max_size=r).filter(any)
    fac = st.tuples(st.builds(EpsLinear, b0, b1), form)
    num = draw(st.lists(fac, min_size=1, max_size=3))
    den = draw(st.lists(fac, min_size=1, max_size=2))
    # keep the series convergent near the origin: per index, upper forms exceed lower ones by at most one
    for i in range(r):
        up = sum(f[i] for _, f in num)
        down = sum(f[i] for _, f in den)
        assume(up <= down + 1)
    return MHF(names, num, den)


@given(eps_mhf())
def test_fold_growth_and_variable_closure(m):
    t = Term.of(m)
    for side, i, f in m.factors:
        if f.param.b1:
            assert all(u.mhf.fold == m.fold + 1 for u in mhf_param_derivative(t, side, i, 3))
    e = taylor_expand(m, 1)
    assert {v for ts in e.orders.values() for u in ts for v in u.mhf.variables} <= set(m.variables)


@given(eps_mhf())
def test_first_order_matches_central_difference(m):
    pt = {"x": F(1, 8), "y": F(1, 9)}
    e = taylor_expand(m, 1)
    sym = mpmath.mpmathify(eval_expansion(e, pt, 25, "float", 192).get(1, 0))
    h = F(1, 10**4)
    with mpmath.workprec(192):
        fd = (mpmath.mpmathify(eval_mhf(m, pt, 25, "float", 192, eps=h)) - mpmath.mpmathify(eval_mhf(m, pt, 25, "float", 192, eps=-h))) / (2 * mpq(h))
    assert abs(sym - fd) <= 1e-6 * max(1, abs(fd))


@given(eps_mhf(), eps_mhf())
def test_linearity(a, b):
    ta, tb = Term.of(a, 3), Term.of(b, F(-1, 2))
    joint = taylor_expand_terms([ta, tb], 1)
    pt = {"x": F(1, 10), "y": F(1, 11)}
    ea = eval_expansion(taylor_expand_terms([ta], 1), pt, 8, "exact")
    eb = eval_expansion(taylor_expand_terms([tb], 1), pt, 8, "exact")
    ej = eval_expansion(joint, pt, 8, "exact")
    for k in (0, 1):
        assert ej.get(k, 0) == ea.get(k, 0) + eb.get(k, 0)


def test_parameter_order_invariance():
    a = MHF(("x", "y"), [(E("2eps+1"), (1, 0)), (E("4-eps"), (0, 1)), (E("3/2"), (1, 1))], [(E("eps+3/2"), (1, 1))])
    b = a.replace(numerator=a.numerator[::-1])
    pt = {"x": F(1, 10), "y": F(1, 5)}
    va = eval_expansion(taylor_expand(a, 2), pt, 10, "exact")
    vb = eval_expansion(taylor_expand(b, 2), pt, 10, "exact")
    assert va == vb


def test_expansion_round_trip():
    e = taylor_expand(gauss2f1("eps", "-eps", "eps+1"), 2)
    assert EpsExpansion.from_dict(e.to_dict()) == e
