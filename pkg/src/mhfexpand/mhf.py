"""Multivariable hypergeometric series and Pochhammer identities.

An :class:`MHF` stands for

    sum_{s in N^r} prod (a)_{mu.s} / prod (b)_{nu.s} * prod (c_i x_i)^{s_i} / s_i!

where ``c_i`` is an optional rational rescaling of the variable bound to index
``i`` (``1`` unless a Gauss multiplication or a negation rewrite produced it).
Several indices may share one variable name.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .errors import ConstantPole, IntegerParameter, MixedSignForm, UnsupportedForm
from .scalar import EpsLinear, EpsSeries, as_rational, format_rational, laurent_invert

__all__ = [
    "IndexForm",
    "PochFactor",
    "MHF",
    "Term",
    "Monomial",
    "poch_series",
    "shift_split",
    "poch_negate",
    "gauss_multiply",
    "collapse_zero",
    "canonical_form",
    "structural_key",
    "normalize",
    "normalize_term",
    "mhf_from_dict",
    "mhf_to_dict",
    "term_from_dict",
    "term_to_dict",
    "format_mhf",
    "format_term",
]

IndexForm = tuple[int, ...]
Monomial = tuple[tuple[str, int], ...]


@dataclass(frozen=True, order=True)
class PochFactor:
    """A Pochhammer symbol ``(param)_{form . s}``."""

    param: EpsLinear
    form: IndexForm

    def __post_init__(self) -> None:
        object.__setattr__(self, "form", tuple(int(v) for v in self.form))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.form) if v)

    @property
    def is_trivial(self) -> bool:
        return not any(self.form)


def _as_factor(f: PochFactor | tuple) -> PochFactor:
    if isinstance(f, PochFactor):
        return f
    p, form = f
    if not isinstance(p, EpsLinear):
        p = EpsLinear.const(p)
    return PochFactor(p, tuple(form))


@dataclass(frozen=True)
class MHF:
    """An r-fold hypergeometric series with an implicit ``1/s_i!`` per index."""

    variables: tuple[str, ...]
    numerator: tuple[PochFactor, ...] = ()
    denominator: tuple[PochFactor, ...] = ()
    scales: tuple[Fraction, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "numerator", tuple(_as_factor(f) for f in self.numerator))
        object.__setattr__(self, "denominator", tuple(_as_factor(f) for f in self.denominator))
        r = len(self.variables)
        scales = tuple(as_rational(c) for c in self.scales) or (Fraction(1),) * r
        if len(scales) != r:
            raise ValueError("one scale per index is required")
        if any(c == 0 for c in scales):
            raise ValueError("variable scales must be nonzero")
        object.__setattr__(self, "scales", scales)
        for f in self.numerator + self.denominator:
            if len(f.form) != r:
                raise ValueError(f"index form {f.form} does not have length {r}")

    @property
    def fold(self) -> int:
        return len(self.variables)

    @property
    def factors(self) -> Iterable[tuple[str, int, PochFactor]]:
        for i, f in enumerate(self.numerator):
            yield "num", i, f
        for i, f in enumerate(self.denominator):
            yield "den", i, f

    @property
    def is_eps_free(self) -> bool:
        return all(f.param.is_constant for _, _, f in self.factors)

    def replace(self, **kw) -> "MHF":
        d = dict(variables=self.variables, numerator=self.numerator, denominator=self.denominator, scales=self.scales)
        d.update(kw)
        return MHF(**d)

    def substitute_eps(self, eps: Fraction | int = 0) -> "MHF":
        """Replace every parameter by its value at a rational eps."""
        e = as_rational(eps)
        sub = lambda f: PochFactor(EpsLinear.const(f.param.at(e)), f.form)  # noqa: E731
        return self.replace(numerator=tuple(map(sub, self.numerator)), denominator=tuple(map(sub, self.denominator)))

    def __str__(self) -> str:
        return format_mhf(self)

    @classmethod
    def constant(cls) -> "MHF":
        return cls(())


def _monomial(d: dict[str, int]) -> Monomial:
    return tuple(sorted((k, int(v)) for k, v in d.items() if v))


@dataclass(frozen=True)
class Term:
    """``coeff * monomial * mhf``; ``monomial`` maps variable names to powers."""

    coeff: EpsSeries
    monomial: Monomial
    mhf: MHF

    def __post_init__(self) -> None:
        c = self.coeff
        if not isinstance(c, EpsSeries):
            c = EpsSeries.const(c)
        object.__setattr__(self, "coeff", c)
        m = self.monomial
        if isinstance(m, dict):
            m = _monomial(m)
        m = tuple(m)
        if any(e < 0 for _, e in m):
            raise ValueError("monomial exponents must be nonnegative")
        object.__setattr__(self, "monomial", m)

    @classmethod
    def of(cls, m: MHF, coeff: EpsSeries | Fraction | int = 1, monomial: dict[str, int] | None = None) -> "Term":
        return cls(coeff if isinstance(coeff, EpsSeries) else EpsSeries.const(coeff), _monomial(monomial or {}), m)

    @property
    def monomial_dict(self) -> dict[str, int]:
        return dict(self.monomial)

    def with_coeff(self, c: EpsSeries) -> "Term":
        return Term(c, self.monomial, self.mhf)

    def times_monomial(self, var: str, power: int = 1) -> "Term":
        d = self.monomial_dict
        d[var] = d.get(var, 0) + power
        return Term(self.coeff, _monomial(d), self.mhf)

    def __str__(self) -> str:
        return format_term(self)


# Pochhammer constants -------------------------------------------------------


def poch_series(a: EpsLinear, c: int, truncation: int | None = None) -> EpsSeries:
    """The constant ``(a)_c`` as a series in eps; ``c`` may be negative.

    Raises:
        ConstantPole: if ``c < 0`` and some ``a - t`` vanishes identically.
    """
    if not isinstance(c, int):
        raise TypeError("Pochhammer shift must be a constant integer")
    out = EpsSeries.const(1)
    if c >= 0:
        for t in range(c):
            out = out * (a + t).series()
        return out
    den = EpsSeries.const(1)
    for t in range(1, -c + 1):
        p = a - t
        if p.is_zero:
            raise ConstantPole(f"({a})_{c} divides by the vanishing parameter {p}")
        den = den * p.series()
    if den.is_constant():
        return EpsSeries.const(1 / den.coefficient(0))
    if a.is_constant:
        return EpsSeries.const(1 / den.value_at_zero())
    if truncation is None:
        raise ValueError("a truncation order is needed to invert an eps-dependent constant")
    return laurent_invert(den, truncation)


def shift_split(f: PochFactor, c: int, truncation: int | None = None) -> tuple[EpsSeries, PochFactor]:
    """Split ``(a)_{L+c} = (a)_c * (a+c)_L`` for a constant integer ``c``."""
    if not isinstance(c, int) or isinstance(c, bool):
        raise TypeError("shift must be a constant integer; register multi-index forms separately")
    return poch_series(f.param, c, truncation), PochFactor(f.param + c, f.form)


# Rewrites -------------------------------------------------------------------


def _replace_factor(m: MHF, side: str, idx: int, new: Sequence[PochFactor], to_side: str | None = None) -> MHF:
    num = list(m.numerator)
    den = list(m.denominator)
    src = num if side == "num" else den
    del src[idx]
    dst = {"num": num, "den": den}[to_side or side]
    dst.extend(new)
    return m.replace(numerator=tuple(num), denominator=tuple(den))


def poch_negate(t: Term, side: str, idx: int) -> Term:
    """Rewrite ``(a)_{-L} = (-1)^L / (1-a)_L`` for a form with entries <= 0.

    The sign is absorbed by negating the scale of every index with an odd
    entry; the factor moves to the other side with parameter ``1 - a``.
    """
    m = t.mhf
    f = (m.numerator if side == "num" else m.denominator)[idx]
    if any(v > 0 for v in f.form):
        raise UnsupportedForm("poch_negate needs a form with no positive entries")
    if f.is_trivial:
        return Term(t.coeff, t.monomial, _replace_factor(m, side, idx, []))
    a = f.param
    if a.is_constant and a.b0.denominator == 1:
        raise IntegerParameter(f"(a)_(-n) -> (-1)^n/(1-a)_n needs a non-integer a, got {a}")
    new = PochFactor(1 - a, tuple(-v for v in f.form))
    mm = _replace_factor(m, side, idx, [new], "den" if side == "num" else "num")
    scales = tuple(c * (-1) ** (abs(v) % 2) for c, v in zip(m.scales, f.form))
    return Term(t.coeff, t.monomial, mm.replace(scales=scales))


def gauss_multiply(f: PochFactor, k: int | None = None) -> tuple[list[PochFactor], tuple[Fraction, ...]]:
    """Gauss multiplication ``(a)_{kL} = k^{kL} prod_t ((a+t)/k)_L``.

    Returns the ``k`` new factors with form ``L`` and the per-index scale
    multipliers ``k^(k*L_i)`` that absorb ``k^{kL}``.
    """
    nz = [v for v in f.form if v]
    if not nz:
        return [f], (Fraction(1),) * len(f.form)
    g = nz[0]
    if any(v != g for v in nz) or g < 1:
        raise UnsupportedForm(f"form {f.form} is not a positive multiple of a simple form")
    if k is None:
        k = g
    if k != g:
        raise UnsupportedForm(f"form {f.form} is not {k} times a simple form")
    if k == 1:
        return [f], (Fraction(1),) * len(f.form)
    base = tuple(1 if v else 0 for v in f.form)
    facs = [PochFactor((f.param + t).scale(Fraction(1, k)), base) for t in range(k)]
    scales = tuple(Fraction(k) ** k if v else Fraction(1) for v in base)
    return facs, scales


def _apply_gauss(t: Term, side: str, idx: int) -> Term:
    m = t.mhf
    f = (m.numerator if side == "num" else m.denominator)[idx]
    facs, mult = gauss_multiply(f)
    mm = _replace_factor(m, side, idx, facs)
    if side == "num":
        scales = tuple(c * s for c, s in zip(m.scales, mult))
    else:
        scales = tuple(c / s for c, s in zip(m.scales, mult))
    return Term(t.coeff, t.monomial, mm.replace(scales=scales))


def _drop_indices(m: MHF, pinned: set[int]) -> MHF:
    keep = [i for i in range(m.fold) if i not in pinned]

    def restrict(fs: Iterable[PochFactor]) -> tuple[PochFactor, ...]:
        out = []
        for f in fs:
            g = tuple(f.form[i] for i in keep)
            if any(g):
                out.append(PochFactor(f.param, g))
        return tuple(out)

    return MHF(
        tuple(m.variables[i] for i in keep),
        restrict(m.numerator),
        restrict(m.denominator),
        tuple(m.scales[i] for i in keep),
    )


def collapse_zero(t: Term) -> Term:
    """Pin indices forced to zero by upper parameters that vanish identically.

    ``(0)_L`` is zero unless ``L = 0``, so every index with a positive entry
    in ``L`` contributes only its ``s_i = 0`` term and the fold drops.
    """
    m = t.mhf
    pinned: set[int] = set()
    for f in m.numerator:
        if not f.param.is_zero:
            continue
        if any(v < 0 for v in f.form) and any(v > 0 for v in f.form):
            raise MixedSignForm(f"(0)_L with mixed-sign form {f.form}")
        if all(v <= 0 for v in f.form):
            if any(f.form):
                raise MixedSignForm(f"(0)_L with non-positive form {f.form} needs a negation rewrite")
            continue
        pinned.update(i for i, v in enumerate(f.form) if v > 0)
    zero_trivial = [f for f in m.numerator if f.param.is_zero and not any(f.form)]
    if not pinned and not zero_trivial:
        return t
    mm = _drop_indices(m, pinned)
    num = tuple(f for f in mm.numerator if not f.param.is_zero)
    mm = mm.replace(numerator=num)
    return Term(t.coeff, t.monomial, canonical_form(mm))


def canonical_form(m: MHF) -> MHF:
    """Sort factors, drop constant ones and cancel numerator/denominator pairs."""
    num = Counter(f for f in m.numerator if not f.is_trivial)
    den = Counter(f for f in m.denominator if not f.is_trivial)
    common = num & den
    num -= common
    den -= common
    return MHF(m.variables, tuple(sorted(num.elements())), tuple(sorted(den.elements())), m.scales)


_PERM_LIMIT = 5040


@lru_cache(maxsize=200_000)
def structural_key(m: MHF) -> tuple:
    """Key identifying ``m`` up to factor order and relabeling of indices.

    Two MHFs with equal keys have identical summands after a permutation of
    the summation indices, hence identical values for any box truncation.
    """
    m = canonical_form(m)
    r = m.fold
    if r == 0:
        return ((), tuple(_fkey(f) for f in m.numerator), tuple(_fkey(f) for f in m.denominator))
    facs = [("n", f) for f in m.numerator] + [("d", f) for f in m.denominator]
    colors = [(m.variables[i], m.scales[i]) for i in range(r)]
    ranks = _rank(colors)
    for _ in range(r):
        sig = []
        for j in range(r):
            parts = []
            for side, f in facs:
                if f.form[j]:
                    others = tuple(sorted((ranks[i], f.form[i]) for i in range(r) if i != j and f.form[i]))
                    parts.append((side, f.param.b0, f.param.b1, f.form[j], others))
            sig.append((ranks[j], tuple(sorted(parts))))
        new = _rank(sig)
        if len(set(new)) == len(set(ranks)):
            ranks = new
            break
        ranks = new
    cells: dict[int, list[int]] = {}
    for j, c in enumerate(ranks):
        cells.setdefault(c, []).append(j)
    groups = [cells[c] for c in sorted(cells)]
    n_perm = 1
    for g in groups:
        for k in range(2, len(g) + 1):
            n_perm *= k
    best = None
    choices = (itertools.permutations(g) for g in groups) if n_perm <= _PERM_LIMIT else ([tuple(g)] for g in groups)
    for combo in itertools.product(*choices):
        order = [j for part in combo for j in part]
        cand = _relabelled(m, order)
        if best is None or cand < best:
            best = cand
    return best


def _fkey(f: PochFactor) -> tuple:
    return (f.param.b0, f.param.b1, f.form)


def _rank(items: list) -> list[int]:
    table = {v: i for i, v in enumerate(sorted(set(items)))}
    return [table[v] for v in items]


def _relabelled(m: MHF, order: list[int]) -> tuple:
    var = tuple((m.variables[j], m.scales[j]) for j in order)
    num = tuple(sorted((f.param.b0, f.param.b1, tuple(f.form[j] for j in order)) for f in m.numerator))
    den = tuple(sorted((f.param.b0, f.param.b1, tuple(f.form[j] for j in order)) for f in m.denominator))
    return (var, num, den)


def normalize_term(t: Term) -> Term:
    """Bring a Term into the form accepted by the derivative engine.

    Negative forms are negated, forms that are a multiple of a simple form
    are split by Gauss multiplication, and vanishing upper parameters are
    collapsed. Forms with mixed signs are left for the evaluator.
    """
    changed = True
    while changed:
        changed = False
        m = t.mhf
        for side, i, f in m.factors:
            nz = [v for v in f.form if v]
            if not nz:
                continue
            if all(v < 0 for v in nz):
                t = poch_negate(t, side, i)
                changed = True
                break
            if all(v > 0 for v in nz) and any(v > 1 for v in nz) and all(v == nz[0] for v in nz):
                t = _apply_gauss(t, side, i)
                changed = True
                break
    t = collapse_zero(t)
    return Term(t.coeff, t.monomial, canonical_form(t.mhf))


def normalize(m: MHF) -> Term:
    """Normal form of an MHF as a Term with unit coefficient."""
    return normalize_term(Term.of(m))


# Serialization --------------------------------------------------------------


def _factor_to_dict(f: PochFactor) -> dict:
    return {"param": f.param.to_dict(), "form": list(f.form)}


def _param_from(v) -> EpsLinear:
    from .scalar import parse_eps_linear

    if isinstance(v, dict):
        return EpsLinear.from_dict(v)
    if isinstance(v, (int, Fraction)):
        return EpsLinear.const(v)
    if isinstance(v, str):
        return parse_eps_linear(v)
    raise ValueError(f"cannot read parameter {v!r}")


def mhf_to_dict(m: MHF) -> dict:
    d = {
        "variables": list(m.variables),
        "numerator": [_factor_to_dict(f) for f in m.numerator],
        "denominator": [_factor_to_dict(f) for f in m.denominator],
    }
    if any(c != 1 for c in m.scales):
        d["scales"] = [format_rational(c) for c in m.scales]
    return d


def mhf_from_dict(d: dict) -> MHF:
    variables = tuple(d.get("variables", ()))

    def facs(key: str) -> tuple[PochFactor, ...]:
        return tuple(PochFactor(_param_from(f["param"]), tuple(f["form"])) for f in d.get(key, ()))

    scales = tuple(as_rational(c) for c in d.get("scales", ()))
    return MHF(variables, facs("numerator"), facs("denominator"), scales)


def term_to_dict(t: Term) -> dict:
    return {"coeff": t.coeff.to_dict(), "monomial": dict(t.monomial), "mhf": mhf_to_dict(t.mhf)}


def term_from_dict(d: dict) -> Term:
    c = d.get("coeff", "1")
    coeff = EpsSeries.from_dict(c) if isinstance(c, dict) else EpsSeries.const(as_rational(c))
    return Term(coeff, _monomial(d.get("monomial", {})), mhf_from_dict(d["mhf"]))


def _fmt_form(form: IndexForm) -> str:
    return "{" + ",".join(str(v) for v in form) + "}"


def format_mhf(m: MHF) -> str:
    """Human notation ``F[{a,{1,1}}, ... / {c,{1,1}} | {x, y}]``."""
    num = ", ".join(f"{{{f.param},{_fmt_form(f.form)}}}" for f in m.numerator)
    den = ", ".join(f"{{{f.param},{_fmt_form(f.form)}}}" for f in m.denominator)
    var = []
    for v, c in zip(m.variables, m.scales):
        if c == 1:
            var.append(v)
        elif c == -1:
            var.append(f"-{v}")
        else:
            var.append(f"{format_rational(c)}*{v}")
    return f"F[{num} / {den} | {{{', '.join(var)}}}]"


def format_term(t: Term) -> str:
    mono = "*".join(v if e == 1 else f"{v}^{e}" for v, e in t.monomial)
    c = str(t.coeff)
    head = f"({c})" if (" " in c) else c
    parts = [head] + ([mono] if mono else [])
    if t.mhf.fold or t.mhf.numerator or t.mhf.denominator:
        parts.append(format_mhf(t.mhf))
    return "*".join(parts)
