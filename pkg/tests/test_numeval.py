from __future__ import annotations

import warnings
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mhfexpand.calculus import taylor_expand
from mhfexpand.errors import DenominatorZero, IllConditioned, PrecisionLoss
from mhfexpand.mhf import MHF, Term
from mhfexpand.numeval import (
    EvalPoint,
    NumSeries,
    PrefactorSpec,
    Truncation,
    combine_expansions,
    eps_stencil,
    eval_expansion,
    eval_mhf,
    eval_term,
    fd_oracle,
    parse_value,
    prefactor_expand,
    prefactor_value,
    to_mpmath,
)
from mhfexpand.scalar import EpsLinear, EpsSeries, parse_eps_linear

E = parse_eps_linear
F = Fraction


def gauss(a, b, c) -> MHF:
    return MHF(("x",), [(E(a), (1,)), (E(b), (1,))], [(E(c), (1,))])


APPELL_F1 = MHF(("x", "y"), [(E("1/2"), (1, 1)), (E("1/3"), (1, 0)), (E("1/5"), (0, 1))], [(E("7/4"), (1, 1))])


def f1_oracle(x, y, n):
    a, b1, b2, c = (mpmath.mpf(v) for v in ("0.5", 1 / mpmath.mpf(3), "0.2", "1.75"))
    return mpmath.fsum(
        mpmath.rf(a, i + j) * mpmath.rf(b1, i) * mpmath.rf(b2, j) / mpmath.rf(c, i + j) / mpmath.factorial(i) / mpmath.factorial(j) * x**i * y**j
        for i in range(n + 1)
        for j in range(n + 1)
    )


# point values ---------------------------------------------------------------


@pytest.mark.parametrize(
    "raw,want",
    [
        ("3/10", F(3, 10)),
        ("0.3", F(3, 10)),
        ("f64:0.3", F(0.3)),
        ({"binary64": "0.1"}, F(0.1)),
        (7, F(7)),
        ("1-2j", complex(1, -2)),
        ({"re": "0.5", "im": "-1"}, complex(0.5, -1)),
    ],
)
def test_parse_value(raw, want):
    assert parse_value(raw) == want


def test_parse_value_rejects_bool():
    with pytest.raises(TypeError):
        parse_value(True)


def test_point_mode():
    assert EvalPoint.of(x="1/3").mode == "exact"
    assert EvalPoint.of(x=0.25).mode == "float"
    assert EvalPoint.of(x="0.5+1j").mode == "complex"
    with pytest.raises(KeyError):
        EvalPoint.of(x=1)["y"]


def test_truncation():
    t = Truncation({"x": 5}, default=9)
    assert t.limit("x") == 5 and t.limit("y") == 9
    with pytest.raises(ValueError):
        Truncation(-1)


# box sums -------------------------------------------------------------------


def test_exact_gauss_matches_mpmath():
    v = eval_mhf(gauss("1/3", "2/5", "8/7"), {"x": "1/4"}, 30, "exact")
    assert isinstance(v, Fraction)
    with mpmath.workdps(40):
        ref = mpmath.fsum(mpmath.rf(F(1, 3), k) * mpmath.rf(F(2, 5), k) / mpmath.rf(F(8, 7), k) / mpmath.factorial(k) * mpmath.mpf(1) / 4**k for k in range(31))
        assert abs(mpmath.mpf(v.numerator) / v.denominator - ref) < mpmath.mpf(10) ** -35


def test_modes_agree_on_f1():
    pt = {"x": "1/5", "y": "1/6"}
    ex = eval_mhf(APPELL_F1, pt, 25, "exact")
    fl = eval_mhf(APPELL_F1, pt, 25, "float")
    mp = eval_mhf(APPELL_F1, pt, 25, "float", 200)
    cx = eval_mhf(APPELL_F1, {"x": complex(0.2), "y": complex(1 / 6)}, 25)
    with mpmath.workdps(50):
        ref = f1_oracle(mpmath.mpf(1) / 5, mpmath.mpf(1) / 6, 25)
        assert abs(to_mpmath(ex) - ref) < mpmath.mpf(10) ** -45
        assert abs(to_mpmath(mp) - ref) < mpmath.mpf(10) ** -55 * 10**10
        assert abs(to_mpmath(fl) - ref) < 1e-17
        assert abs(to_mpmath(cx) - ref) < 1e-15
    assert isinstance(fl, np.longdouble)


def test_per_variable_truncation():
    pt = {"x": "1/5", "y": "1/6"}
    v = eval_mhf(APPELL_F1, pt, {"x": 3, "y": 5}, "exact")
    # direct double loop with the same box
    tot = Fraction(0)
    for i in range(4):
        for j in range(6):
            t = Fraction(1)
            for k in range(i + j):
                t *= (F(1, 2) + k) / (F(7, 4) + k)
            for k in range(i):
                t *= F(1, 3) + k
            for k in range(j):
                t *= F(1, 5) + k
            fi = 1
            for k in range(1, i + 1):
                fi *= k
            fj = 1
            for k in range(1, j + 1):
                fj *= k
            tot += t / fi / fj * F(1, 5) ** i * F(1, 6) ** j
    assert v == tot


def test_exact_is_deterministic():
    pt = {"x": "3/10"}
    m = gauss("1/2", "1/3", "eps+1")
    assert eval_mhf(m, pt, 20, eps="1/7") == eval_mhf(m, pt, 20, eps="1/7")


def test_negative_and_complex_mpmath_points():
    # regression: sign of mpmath inputs was dropped
    m = gauss("1", "1", "2")
    pos = eval_mhf(m, {"x": mpmath.mpf("-0.25")}, 40, "float", 128)
    ref = mpmath.log(1 + mpmath.mpf("0.25")) / mpmath.mpf("0.25")
    assert abs(to_mpmath(pos) - ref) < 1e-20
    z = mpmath.mpc("-0.25", "0.1")
    cv = eval_mhf(m, {"x": z}, 60)
    assert abs(to_mpmath(cv) - (-mpmath.log(1 - z) / z)) < 1e-15


def test_denominator_zero():
    with pytest.raises(DenominatorZero):
        eval_mhf(gauss("1/2", "1/3", "-2"), {"x": "1/4"}, 5, "exact")


def test_zero_point_gives_one():
    assert eval_mhf(APPELL_F1, {"x": 0, "y": 0}, 10, "exact") == 1


def test_exact_mode_needs_rationals():
    with pytest.raises(ValueError):
        eval_mhf(gauss("1", "1", "2"), {"x": 0.25}, 5, "exact")


def test_eval_term_needs_eps_for_eps_coefficient():
    t = Term(EpsSeries.from_coeffs([1, 1], 0, 3), (("x", 2),), gauss("1", "1", "2"))
    with pytest.raises(ValueError):
        eval_term(t, {"x": "1/2"}, 5)
    v = eval_term(t, {"x": "1/2"}, 5, eps="1/3")
    assert v == F(4, 3) * F(1, 4) * eval_mhf(t.mhf, {"x": "1/2"}, 5)


@given(st.fractions(min_value=F(-1, 2), max_value=F(1, 2), max_denominator=50))
def test_float_tracks_exact(x):
    m = gauss("1/3", "2/5", "8/7")
    ex = eval_mhf(m, {"x": x}, 20, "exact")
    fl = eval_mhf(m, {"x": float(x)}, 20, "float")
    assert abs(float(ex) - float(fl)) <= 1e-15 * max(1.0, abs(float(ex)))


def test_expansion_precision_loss_warning():
    # two nearly equal terms with opposite sign
    e = taylor_expand(gauss("eps", "-eps", "eps+1"), 0)
    from mhfexpand.calculus import EpsExpansion

    m1, m2 = gauss("1", "1", "2"), gauss("1", "1", "2")
    t1 = Term(EpsSeries.from_coeffs([1], 0, 2), (), m1)
    t2 = Term(EpsSeries.from_coeffs([F(-1) + F(1, 10**30)], 0, 2), (), m2)
    ee = EpsExpansion({0: [t1, t2]}, 2)
    with pytest.warns(PrecisionLoss):
        eval_expansion(ee, {"x": 0.25}, 10, "float")
    assert eval_expansion(e, {"x": 0.25}, 10, "float")[0] == 1


# prefactors -----------------------------------------------------------------


def test_gamma_squared_poles():
    s = PrefactorSpec(gamma_factors=((E("eps"), 1), (E("eps"), 1)))
    g = prefactor_expand(s, None, K=1, dps=30)
    assert g.min_order == -2
    with mpmath.workdps(30):
        assert abs(g.coefficient(-2) - 1) < 1e-28
        assert abs(g.coefficient(-1) + 2 * mpmath.euler) < 1e-28
        assert abs(g.coefficient(0) - (2 * mpmath.euler**2 + mpmath.pi**2 / 6)) < 1e-27


def test_power_prefactor_series():
    s = PrefactorSpec((F(3), F(0)), (("x", E("2eps+1")),))
    g = prefactor_expand(s, {"x": F(1, 2)}, K=2)
    with mpmath.workdps(30):
        L = mpmath.log(mpmath.mpf(1) / 2)
        want = [F(3, 2), 3 * L, 3 * L**2]
        for k, w in enumerate(want):
            assert abs(g.coefficient(k) - w) < 1e-28


@pytest.mark.parametrize("eps", [F(1, 100), F(-1, 300)])
def test_prefactor_series_matches_value(eps):
    s = PrefactorSpec((F(2), F(1)), (("1-x", E("eps-1/2")),), ((E("-eps-1/2"), 1), (E("2eps+1"), -1), (E("-1-eps"), 1)))
    pt = {"x": F(1, 3)}
    g = prefactor_expand(s, pt, K=8, dps=40)
    with mpmath.workdps(40):
        direct = prefactor_value(s, pt, eps)
        e = mpmath.mpf(eps.numerator) / eps.denominator
        approx = g.evaluate(e)
        assert abs(approx - direct) / abs(direct) < 10 * abs(e) ** 9


def test_prefactor_product():
    a = PrefactorSpec((F(2), F(0)), (("x", E("eps")),), ((E("eps+1/2"), 1),))
    b = PrefactorSpec((F(-1, 3), F(0)), (), ((E("-eps"), -1),))
    pt = {"x": F(3, 7)}
    with mpmath.workdps(30):
        lhs = prefactor_value(a * b, pt, F(1, 50))
        rhs = prefactor_value(a, pt, F(1, 50)) * prefactor_value(b, pt, F(1, 50))
        assert abs(lhs - rhs) < 1e-25
    assert (a * b).pole_depth == -1


def test_combine_expansions_against_direct():
    m = gauss("eps", "-eps", "eps+1")
    s = PrefactorSpec(gamma_factors=((E("eps"), 1),))
    e = taylor_expand(m, 3)
    ser = combine_expansions([(s, e)], {"x": F(1, 10)}, 40, K=2, dps=40)
    assert isinstance(ser, NumSeries) and ser.min_order == -1
    with mpmath.workdps(40):
        ep = mpmath.mpf(1) / 10**4
        direct = mpmath.gamma(ep) * mpmath.hyp2f1(ep, -ep, 1 + ep, mpmath.mpf(1) / 10)
        assert abs(ser.evaluate(ep) - direct) < 1e-11


# finite-difference oracle ---------------------------------------------------


def test_stencil():
    assert eps_stencil(2, F(1, 10)) == [F(1, 10), F(-1, 10), F(1, 20), F(-1, 20)]
    with pytest.raises(ValueError):
        eps_stencil(0)


def test_oracle_dilog():
    # 2F1(eps,-eps;1+eps;x) = 1 - eps^2 Li2(x) + O(eps^3)
    out = fd_oracle(gauss("eps", "-eps", "eps+1"), {"x": F(1, 10)}, 60, K=2)
    assert abs(out[0] - 1) < 1e-12
    assert abs(out[1]) < 1e-12
    assert abs(out[2] + mpmath.polylog(2, 0.1)) < 1e-10
    assert round(float(out[2]), 7) == -0.1026178


def test_oracle_eps_free():
    out = fd_oracle(gauss("1", "1", "2"), {"x": F(1, 4)}, 60, K=2)
    assert abs(out[0] + mpmath.log(0.75) * 4) < 1e-12
    assert abs(out[1]) < 1e-12 and abs(out[2]) < 1e-12


def test_oracle_pole_depth():
    m = MHF(("x",), [(E("1"), (1,)), (E("2"), (1,))], [(E("eps"), (1,)), (E("eps-1"), (1,))])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IllConditioned)
        out = fd_oracle(m, {"x": F(1, 10)}, 40, K=0, pole_depth=2, size=8)
    assert set(out) == {-2, -1, 0}


def test_oracle_ill_conditioned():
    with pytest.warns(IllConditioned):
        fd_oracle(gauss("eps", "-eps", "eps+1"), {"x": F(1, 10)}, 60, K=2, h=F(1, 2), size=3, rtol=1e-14)


def test_oracle_stencil_too_small():
    with pytest.raises(ValueError):
        fd_oracle(gauss("eps", "-eps", "eps+1"), {"x": F(1, 10)}, 10, K=4, size=3)
