"""Taylor expansion in eps by symbolic Pochhammer derivatives.

Every derivative of a Pochhammer symbol with respect to its parameter is
written as an extra sum, and the sum is reshuffled into one more summation
index:

    d/da sum_n B(n) (a)_n x^n/n!
        = x sum_{n,k} B(n+k+1) (1)_k (1)_n (a)_k (a+1)_{k+n} / ((a+1)_k (2)_{k+n}) x^{n+k}/(n! k!)

A multi-index occurrence ``(a)_{s_1+...+s_p}`` is split into a chain of
single-index pieces, starting from the last index of the MHF; each piece
contributes one reshuffled term.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Iterable, Mapping, Sequence

from .errors import ConstantPole, NotNormalized, SingularLower
from .mhf import (
    MHF,
    PochFactor,
    Term,
    canonical_form,
    collapse_zero,
    normalize_term,
    poch_series,
    structural_key,
    term_from_dict,
    term_to_dict,
)
from .scalar import EpsLinear, EpsSeries, laurent_invert, poch

__all__ = [
    "EpsExpansion",
    "PochDerivative",
    "poch_derivative_series",
    "merge_terms",
    "mhf_param_derivative",
    "eps_derivative",
    "taylor_expand",
    "taylor_expand_terms",
    "arg_derivative",
    "theta_apply",
    "at_eps_zero",
]


@dataclass(frozen=True)
class EpsExpansion:
    """Map from eps power to a list of Terms, known below ``truncation``."""

    orders: Mapping[int, tuple[Term, ...]] = field(default_factory=dict)
    truncation: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "orders", {int(k): tuple(v) for k, v in dict(self.orders).items() if v})

    @property
    def min_order(self) -> int | None:
        return min(self.orders) if self.orders else None

    def terms(self, k: int) -> tuple[Term, ...]:
        return self.orders.get(k, ())

    def max_fold(self) -> int:
        return max((t.mhf.fold for ts in self.orders.values() for t in ts), default=0)

    def to_dict(self) -> dict:
        return {
            "truncation": self.truncation,
            "orders": {str(k): [term_to_dict(t) for t in v] for k, v in sorted(self.orders.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EpsExpansion":
        return cls({int(k): tuple(term_from_dict(t) for t in v) for k, v in d.get("orders", {}).items()}, int(d.get("truncation", 0)))

    def __str__(self) -> str:
        lines = []
        for k in sorted(self.orders):
            lines.append(f"eps^{k}:")
            lines.extend(f"  {t}" for t in self.orders[k])
        return "\n".join(lines) if lines else "0"


@dataclass(frozen=True)
class PochDerivative:
    """``d(a)_n/da = (a)_n * (1/a) * sum_{k<n} (a)_k/(a+1)_k`` before reshuffling."""

    param: EpsLinear
    index: int

    @property
    def aux_numerator(self) -> EpsLinear:
        return self.param

    @property
    def aux_denominator(self) -> EpsLinear:
        return self.param + 1

    def value(self, a: Fraction, n: int) -> Fraction:
        """Numeric value of the derivative at a rational ``a``."""
        inner = sum((poch(a, k) / poch(a + 1, k) for k in range(n)), Fraction(0))
        return poch(a, n) * inner / a


def poch_derivative_series(a: EpsLinear, index: int) -> PochDerivative:
    """Inner-sum representation of the parameter derivative of ``(a)_{s_index}``."""
    return PochDerivative(a, index)


# merging --------------------------------------------------------------------


def merge_terms(terms: Iterable[Term]) -> list[Term]:
    """Combine Terms whose MHFs agree up to index relabeling.

    The representation of the first occurrence is kept; zero coefficients
    are dropped.
    """
    acc: dict[tuple, list] = {}
    for t in terms:
        key = (t.monomial, structural_key(t.mhf))
        slot = acc.get(key)
        if slot is None:
            acc[key] = [t.coeff, t]
        else:
            slot[0] = slot[0] + t.coeff
    out = []
    for c, t in acc.values():
        if not c.is_zero:
            out.append(Term(c, t.monomial, canonical_form(t.mhf)))
    return out


# parameter derivatives ------------------------------------------------------


def _inv_poch(b: EpsLinear, c: int, truncation: int | None) -> EpsSeries:
    """``1/(b)_c`` as a series."""
    if c >= 0:
        s = poch_series(b, c)
        if s.is_constant():
            return EpsSeries.const(1 / s.coefficient(0))
        if truncation is None:
            raise ValueError("a truncation order is needed to invert an eps-dependent constant")
        return laurent_invert(s, truncation)
    out = EpsSeries.const(1)
    for t in range(1, -c + 1):
        out = out * (b - t).series()
    return out


def _reshuffle(t: Term, side: str, idx: int, d: int, prefix: Sequence[int], truncation: int | None) -> Term:
    m = t.mhf
    r = m.fold
    target = (m.numerator if side == "num" else m.denominator)[idx]
    a = target.param
    coeff = t.coeff * m.scales[d]
    num: list[PochFactor] = []
    den: list[PochFactor] = []
    for s_side, s_idx, g in m.factors:
        ext = g.form + (g.form[d],)
        shift = g.form[d]
        if s_side == side and s_idx == idx:
            if side == "den":
                inv_a = laurent_invert(a.series(), truncation)
                coeff = -(coeff * inv_a * inv_a)
            (num if side == "num" else den).append(PochFactor(a + 1, ext))
            continue
        if shift == 0:
            (num if s_side == "num" else den).append(PochFactor(g.param, ext))
            continue
        if s_side == "num":
            const = poch_series(g.param, shift, truncation)
            if const.is_zero:
                return Term(EpsSeries.zero(truncation), t.monomial, m)
            coeff = coeff * const
            num.append(PochFactor(g.param + shift, ext))
        else:
            try:
                coeff = coeff * _inv_poch(g.param, shift, truncation)
            except ZeroDivisionError as exc:
                raise ConstantPole(f"shifting denominator ({g.param}) by {shift} divides by zero") from exc
            den.append(PochFactor(g.param + shift, ext))
    aux = [0] * (r + 1)
    for i in prefix:
        aux[i] = 1
    aux[r] = 1
    aux_t = tuple(aux)
    e_d = tuple(1 if i == d else 0 for i in range(r + 1))
    e_k = tuple(1 if i == r else 0 for i in range(r + 1))
    e_dk = tuple(1 if i in (d, r) else 0 for i in range(r + 1))
    one = EpsLinear.const(1)
    num += [PochFactor(a, aux_t), PochFactor(one, e_d), PochFactor(one, e_k)]
    den += [PochFactor(a + 1, aux_t), PochFactor(EpsLinear.const(2), e_dk)]
    new = MHF(m.variables + (m.variables[d],), tuple(num), tuple(den), m.scales + (m.scales[d],))
    return Term(coeff, t.monomial, canonical_form(new)).times_monomial(m.variables[d])


def mhf_param_derivative(t: Term, side: str, idx: int, truncation: int | None = None) -> list[Term]:
    """Derivative of ``t`` with respect to the parameter of one factor occurrence.

    Args:
        t: The Term.
        side: ``"num"`` or ``"den"``.
        idx: Position of the factor in that list.
        truncation: Exclusive eps order for coefficient series that need an
            inverse.

    Returns:
        Terms of fold ``r+1``, one per index in the occurrence's form.

    Raises:
        NotNormalized: if the form has entries other than 0 and 1.
    """
    m = t.mhf
    f = (m.numerator if side == "num" else m.denominator)[idx]
    if not any(f.form):
        return []
    if any(v not in (0, 1) for v in f.form):
        raise NotNormalized(f"cannot differentiate ({f.param})_{{{f.form}}}; normalize the form first")
    sup = [i for i, v in enumerate(f.form) if v]
    out = []
    prefix: list[int] = []
    for d in reversed(sup):
        term = _reshuffle(t, side, idx, d, tuple(prefix), truncation)
        if not term.coeff.is_zero:
            out.append(term)
        prefix.append(d)
    return out


def eps_derivative(t: Term, truncation: int | None = None) -> list[Term]:
    """d/deps of a Term: chain rule over eps-dependent factors plus the coefficient."""
    out: list[Term] = []
    if not t.coeff.is_constant():
        dc = t.coeff.derivative()
        if not dc.is_zero:
            out.append(Term(dc, t.monomial, t.mhf))
    seen: Counter = Counter()
    first: dict[tuple, int] = {}
    m = t.mhf
    for side, i, f in m.factors:
        if f.param.b1 == 0:
            continue
        key = (side, f)
        seen[key] += 1
        first.setdefault(key, i)
    for (side, f), mult in seen.items():
        for d in mhf_param_derivative(t, side, first[(side, f)], truncation):
            out.append(Term(d.coeff * (f.param.b1 * mult), d.monomial, d.mhf))
    return merge_terms(out)


def at_eps_zero(terms: Iterable[Term]) -> list[Term]:
    """Set eps to zero in coefficients and parameters, collapsing vanishing upper parameters."""
    out = []
    for t in terms:
        c0 = t.coeff.value_at_zero()
        if c0 == 0:
            continue
        m0 = t.mhf.substitute_eps(0)
        out.append(collapse_zero(Term(EpsSeries.const(c0), t.monomial, m0)))
    return merge_terms(out)


def _singular_lowers(m: MHF) -> list[PochFactor]:
    return [f for f in m.denominator if f.param.b0.denominator == 1 and f.param.b0 <= 0 and any(f.form)]


def taylor_expand_terms(terms: Sequence[Term], K: int) -> EpsExpansion:
    """Taylor coefficients through eps^K of a sum of Terms."""
    if K < 0:
        raise ValueError("expansion order must be >= 0")
    cur = merge_terms(normalize_term(t) for t in terms)
    for t in cur:
        bad = _singular_lowers(t.mhf)
        if bad:
            raise SingularLower(f"lower parameter {bad[0].param} may produce poles; use laurent_expand")
    orders: dict[int, list[Term]] = {0: at_eps_zero(cur)}
    for i in range(1, K + 1):
        trunc = K - i + 1
        nxt: list[Term] = []
        for t in cur:
            nxt.extend(eps_derivative(Term(t.coeff.truncate(trunc + 1), t.monomial, t.mhf), trunc))
        cur = merge_terms(nxt)
        scale = Fraction(1, factorial(i))
        orders[i] = [Term(t.coeff * scale, t.monomial, t.mhf) for t in at_eps_zero(cur)]
    return EpsExpansion(orders, K + 1)


def taylor_expand(m: MHF, K: int) -> EpsExpansion:
    """Taylor coefficients of an MHF through eps^K.

    Raises:
        SingularLower: if a lower parameter has a non-positive integer eps-free part.
    """
    return taylor_expand_terms([Term.of(m)], K)


# argument derivatives -------------------------------------------------------


def arg_derivative(t: Term, var: str) -> list[Term]:
    """d/d(var) of a Term, product rule over the monomial included."""
    out: list[Term] = []
    mono = t.monomial_dict
    p = mono.get(var, 0)
    if p:
        mono2 = dict(mono)
        mono2[var] = p - 1
        out.append(Term(t.coeff * p, mono2, t.mhf))
    m = t.mhf
    for j, v in enumerate(m.variables):
        if v != var:
            continue
        coeff = t.coeff * m.scales[j]
        num, den = [], []
        vanished = False
        for side, _, g in m.factors:
            c = g.form[j]
            if c == 0:
                (num if side == "num" else den).append(g)
                continue
            if side == "num":
                const = poch_series(g.param, c)
                if const.is_zero:
                    vanished = True
                    break
                coeff = coeff * const
                num.append(PochFactor(g.param + c, g.form))
            else:
                try:
                    coeff = coeff * _inv_poch(g.param, c, t.coeff.truncation)
                except ZeroDivisionError as exc:
                    raise ConstantPole(f"argument derivative divides by ({g.param})_{c} = 0") from exc
                den.append(PochFactor(g.param + c, g.form))
        if vanished or coeff.is_zero:
            continue
        new = m.replace(numerator=tuple(num), denominator=tuple(den))
        out.append(collapse_zero(Term(coeff, t.monomial, canonical_form(new))))
    return merge_terms(out)


def theta_apply(t: Term, var: str) -> list[Term]:
    """Euler operator ``var * d/d(var)`` applied to a Term."""
    return merge_terms(d.times_monomial(var) for d in arg_derivative(t, var))
