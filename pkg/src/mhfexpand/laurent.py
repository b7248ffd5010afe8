"""Laurent expansion through step-down operators in the Euler operators.

A lower parameter ``b`` with a non-positive integer eps-free part may make the
series singular at ``eps = 0``. Writing ``theta_nu = sum_j nu_j theta_j`` for
the index form of that parameter,

    F(b) = (theta_nu + b)/b . F(b + 1),

so raising ``b`` step by step to ``B1*eps + 1`` gives a Taylor-expandable
secondary function, and the composed operator carries the poles. Operators
are polynomials in the thetas only; they are multiplied commutatively and
applied as they are, without reduction modulo the annihilators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from math import comb, factorial
from typing import Mapping, Sequence

from .calculus import EpsExpansion, merge_terms, taylor_expand_terms, theta_apply
from .errors import TruncationTooShallow, UnsupportedForm
from .mhf import MHF, PochFactor, Term, normalize_term
from .scalar import EpsLinear, EpsSeries, format_rational, laurent_invert

__all__ = [
    "StepDownOperator",
    "Annihilator",
    "Classification",
    "StepChain",
    "classify_singular",
    "build_secondary",
    "unit_step_down",
    "compose_chain",
    "apply_operator",
    "build_annihilator",
    "annihilator_residual",
    "laurent_expand",
    "laurent_expand_terms",
    "expansion_times_series",
]

ThetaMono = tuple[int, ...]


def _add_into(acc: dict, k, v: EpsSeries) -> None:
    cur = acc.get(k)
    acc[k] = v if cur is None else cur + v


@dataclass(frozen=True)
class StepDownOperator:
    """Polynomial in the Euler operators of ``variables`` with eps-series coefficients."""

    variables: tuple[str, ...]
    terms: Mapping[ThetaMono, EpsSeries] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "variables", tuple(self.variables))
        r = len(self.variables)
        clean = {}
        for mono, c in dict(self.terms).items():
            mono = tuple(int(e) for e in mono)
            if len(mono) != r or any(e < 0 for e in mono):
                raise ValueError(f"bad theta exponent {mono} for {r} variables")
            if not isinstance(c, EpsSeries):
                c = EpsSeries.const(c)
            if not c.is_zero:
                clean[mono] = c
        object.__setattr__(self, "terms", dict(sorted(clean.items())))

    @classmethod
    def identity(cls, variables: Sequence[str]) -> "StepDownOperator":
        return cls(tuple(variables), {(0,) * len(variables): EpsSeries.const(1)})

    @property
    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    @property
    def min_order(self) -> int | None:
        vals = [c.valuation for c in self.terms.values()]
        return int(min(vals)) if vals else None

    @property
    def truncation(self) -> int | None:
        ts = [c.truncation for c in self.terms.values() if c.truncation is not None]
        return min(ts) if ts else None

    def coefficient(self, k: int) -> dict[ThetaMono, Fraction]:
        """The eps^k part as a rational theta-polynomial."""
        return {m: c.coefficient(k) for m, c in self.terms.items() if c.coefficient(k) != 0}

    def __add__(self, other: "StepDownOperator") -> "StepDownOperator":
        self._check(other)
        acc = dict(self.terms)
        for m, c in other.terms.items():
            _add_into(acc, m, c)
        return StepDownOperator(self.variables, acc)

    def __sub__(self, other: "StepDownOperator") -> "StepDownOperator":
        return self + other.scale(EpsSeries.const(-1))

    def __mul__(self, other: "StepDownOperator") -> "StepDownOperator":
        self._check(other)
        acc: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                _add_into(acc, tuple(a + b for a, b in zip(m1, m2)), c1 * c2)
        return StepDownOperator(self.variables, acc)

    def scale(self, s: EpsSeries) -> "StepDownOperator":
        return StepDownOperator(self.variables, {m: c * s for m, c in self.terms.items()})

    def truncate(self, truncation: int | None) -> "StepDownOperator":
        return StepDownOperator(self.variables, {m: c.truncate(truncation) for m, c in self.terms.items()})

    def shift_theta(self, i: int, k: int) -> "StepDownOperator":
        """Substitute ``theta_i -> theta_i + k``."""
        acc: dict = {}
        for m, c in self.terms.items():
            e = m[i]
            for j in range(e + 1):
                mono = m[:i] + (j,) + m[i + 1 :]
                _add_into(acc, mono, c * (comb(e, j) * Fraction(k) ** (e - j)))
        return StepDownOperator(self.variables, acc)

    def evaluate(self, theta: Sequence, eps) -> Fraction:
        """Value at numeric theta and eps."""
        total = Fraction(0)
        for m, c in self.terms.items():
            v = c.evaluate(eps)
            for t, e in zip(theta, m):
                v *= Fraction(t) ** e
            total += v
        return total

    def _check(self, other: "StepDownOperator") -> None:
        if self.variables != other.variables:
            raise ValueError(f"operators act on different variables {self.variables} and {other.variables}")

    def to_dict(self) -> dict:
        return {
            "variables": list(self.variables),
            "terms": [{"theta": list(m), "coeff": c.to_dict()} for m, c in self.terms.items()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StepDownOperator":
        return cls(tuple(d["variables"]), {tuple(t["theta"]): EpsSeries.from_dict(t["coeff"]) for t in d["terms"]})

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.terms.items():
            th = "*".join(f"theta_{v}" + (f"^{e}" if e > 1 else "") for v, e in zip(self.variables, m) if e)
            parts.append(f"({c})" + (f"*{th}" if th else ""))
        return " + ".join(parts)


# classification -------------------------------------------------------------


@dataclass(frozen=True)
class StepChain:
    """Unit steps that bring a raised lower parameter back to its original value."""

    factor_index: int
    original: EpsLinear
    form: tuple[int, ...]
    steps: tuple[EpsLinear, ...]

    @property
    def pole_steps(self) -> int:
        return sum(1 for b in self.steps if b.b0 == 0)


@dataclass(frozen=True)
class Classification:
    """Result of :func:`classify_singular`."""

    kind: str
    singular: tuple[tuple[int, PochFactor], ...] = ()

    @property
    def is_taylor(self) -> bool:
        return self.kind == "Taylor"

    def __str__(self) -> str:
        if self.is_taylor:
            return "Taylor"
        return "PossiblyLaurent(" + ", ".join(f"({f.param})_{list(f.form)}" for _, f in self.singular) + ")"


def _is_singular(f: PochFactor) -> bool:
    b0 = f.param.b0
    return b0.denominator == 1 and b0 <= 0 and any(f.form)


def classify_singular(m: MHF) -> Classification:
    """Flag lower parameters whose eps-free part is zero or a negative integer."""
    bad = tuple((i, f) for i, f in enumerate(m.denominator) if _is_singular(f))
    return Classification("PossiblyLaurent", bad) if bad else Classification("Taylor")


def build_secondary(m: MHF) -> tuple[MHF, list[StepChain]]:
    """Replace each singular lower ``B1*eps + B0`` by ``B1*eps + 1``.

    Returns the secondary MHF and, per replaced factor, the descending list of
    parameters ``B1*eps + B0, ..., B1*eps`` at which unit steps are taken.
    """
    cls = classify_singular(m)
    if cls.is_taylor:
        return m, []
    den = list(m.denominator)
    chains = []
    for i, f in cls.singular:
        b0 = int(f.param.b0)
        steps = tuple(EpsLinear(f.param.b0 + k, f.param.b1) for k in range(1 - b0))
        den[i] = PochFactor(EpsLinear(1, f.param.b1), f.form)
        chains.append(StepChain(i, f.param, f.form, steps))
    return m.replace(denominator=tuple(den)), chains


# operators ------------------------------------------------------------------


def _theta_linear(form: Sequence[int], variables: Sequence[str]) -> tuple[tuple[str, ...], dict[str, int]]:
    names = tuple(dict.fromkeys(variables))
    coef: dict[str, int] = {}
    for v, c in zip(variables, form):
        if v in coef and coef[v] != c:
            raise UnsupportedForm(f"indices sharing variable {v!r} enter the form {tuple(form)} differently")
        coef[v] = c
    return names, coef


def unit_step_down(b: EpsLinear, form: Sequence[int], variables: Sequence[str] | None = None, truncation: int = 4) -> StepDownOperator:
    """``(sum_j form_j theta_j + b)/b`` with ``1/b`` expanded below eps^truncation.

    Raises:
        IdenticallyZero: if ``b`` vanishes identically.
    """
    if variables is None:
        variables = tuple(f"x{i + 1}" for i in range(len(form)))
    names, coef = _theta_linear(form, variables)
    inv = laurent_invert(b.series(), truncation)
    r = len(names)
    terms = {(0,) * r: EpsSeries.from_coeffs([1], 0, inv.truncation)}
    for i, v in enumerate(names):
        if coef[v]:
            mono = tuple(1 if j == i else 0 for j in range(r))
            terms[mono] = inv * coef[v]
    return StepDownOperator(names, terms)


def compose_chain(chains: Sequence[StepChain], variables: Sequence[str], truncation: int = 4) -> StepDownOperator:
    """Product of the unit operators of all chains, truncated below eps^truncation.

    Each unit inverse is expanded deep enough that the product is exact
    below ``truncation`` despite the poles of the other factors.
    """
    names = tuple(dict.fromkeys(variables))
    depth = sum(c.pole_steps for c in chains)
    units = [unit_step_down(b, c.form, variables, truncation + depth) for c in chains for b in c.steps]
    op = reduce(lambda a, b: a * b, units, StepDownOperator.identity(names))
    return op.truncate(truncation)


def _apply_mono(t: Term, variables: Sequence[str], mono: ThetaMono, cache: dict) -> list[Term]:
    key = (t, mono)
    hit = cache.get(key)
    if hit is not None:
        return hit
    if not any(mono):
        out = [t]
    else:
        i = next(j for j, e in enumerate(mono) if e)
        lower = mono[:i] + (mono[i] - 1,) + mono[i + 1 :]
        out = []
        for u in _apply_mono(t, variables, lower, cache):
            out.extend(theta_apply(u, variables[i]))
        out = merge_terms(out)
    cache[key] = out
    return out


def apply_operator(H: StepDownOperator, e: EpsExpansion, K: int | None = None) -> EpsExpansion:
    """Cauchy product of the operator's eps-orders acting on the expansion's orders.

    Args:
        H: Operator; its coefficients are known below ``H.truncation``.
        e: Expansion known below ``e.truncation``.
        K: Highest order wanted; defaults to the highest order both inputs fix.

    Raises:
        TruncationTooShallow: if ``K`` lies beyond what the inputs determine.
    """
    if not H.terms or not e.orders:
        return EpsExpansion({}, e.truncation if K is None else K + 1)
    h_min = H.min_order
    e_min = min(e.orders)
    h_tr = H.truncation
    reach = e.truncation + h_min
    if h_tr is not None:
        reach = min(reach, h_tr + e_min)
    if K is None:
        K = reach - 1
    elif K + 1 > reach:
        raise TruncationTooShallow(f"order {K} needs operator/expansion truncations reaching eps^{K + 1}; have eps^{reach}")
    cache: dict = {}
    out: dict[int, list[Term]] = {}
    for i in range(h_min, K - e_min + 1):
        part = H.coefficient(i)
        if not part:
            continue
        for j in range(e_min, K - i + 1):
            for t in e.terms(j):
                for mono, c in part.items():
                    for u in _apply_mono(t, H.variables, mono, cache):
                        out.setdefault(i + j, []).append(Term(u.coeff * c, u.monomial, u.mhf))
    return EpsExpansion({k: merge_terms(v) for k, v in out.items()}, K + 1)


def expansion_times_series(e: EpsExpansion, s: EpsSeries, K: int | None = None) -> EpsExpansion:
    """Multiply every order of an expansion by a (rational) eps-series."""
    if s.is_zero or not e.orders:
        return EpsExpansion({}, e.truncation)
    reach = e.truncation + int(s.valuation)
    if s.truncation is not None:
        reach = min(reach, s.truncation + min(e.orders))
    if K is None:
        K = reach - 1
    out: dict[int, list[Term]] = {}
    for j, ts in e.orders.items():
        for i, c in s.items():
            if i + j > K:
                continue
            for t in ts:
                out.setdefault(i + j, []).append(Term(t.coeff * c, t.monomial, t.mhf))
    return EpsExpansion({k: merge_terms(v) for k, v in out.items()}, K + 1)


# annihilators ---------------------------------------------------------------


@dataclass(frozen=True)
class Annihilator:
    """``L_i = h_i(theta) (1/x_i) - g_i(theta)``, which kills the series."""

    shift_part: StepDownOperator
    direct_part: StepDownOperator
    index: int

    @property
    def variables(self) -> tuple[str, ...]:
        return self.shift_part.variables

    def to_weyl(self) -> dict[tuple[tuple[int, ...], tuple[int, ...]], EpsSeries]:
        """Expand into ``sum c * x^alpha * d^beta`` (all x powers to the left).

        Uses ``theta^k = sum_j S(k, j) x^j d^j`` and
        ``h(theta) x_i^{-1} = x_i^{-1} h(theta - e_i)``.
        """
        r = len(self.variables)
        acc: dict = {}
        shifted = self.shift_part.shift_theta(self.index, -1)
        for sign, op, xshift in ((1, shifted, -1), (-1, self.direct_part, 0)):
            for mono, c in op.terms.items():
                for js, coef in _stirling_expand(mono):
                    alpha = list(js)
                    alpha[self.index] += xshift
                    if min(alpha) < 0:
                        raise ArithmeticError("negative x power left in annihilator")
                    _add_into(acc, (tuple(alpha), tuple(js)), c * (sign * coef))
        return {k: v for k, v in sorted(acc.items()) if not v.is_zero}

    def __str__(self) -> str:
        v = self.variables[self.index]
        return f"[{self.shift_part}] (1/{v}) - [{self.direct_part}]"


def _stirling2(k: int, j: int) -> int:
    table = [[1]]
    for n in range(1, k + 1):
        row = [0] * (n + 1)
        for i in range(1, n + 1):
            row[i] = i * (table[n - 1][i] if i < n else 0) + table[n - 1][i - 1]
        table.append(row)
    return table[k][j] if j <= k else 0


def _stirling_expand(mono: ThetaMono) -> list[tuple[tuple[int, ...], int]]:
    per = [[(j, _stirling2(k, j)) for j in range(k + 1) if _stirling2(k, j)] for k in mono]
    out = [((), 1)]
    for opts in per:
        out = [(js + (j,), c * s) for js, c in out for j, s in opts]
    return out


def _poly_in_theta(names: tuple[str, ...], var_pos: Sequence[int], form: Sequence[int], const: EpsLinear) -> StepDownOperator:
    """The linear operator ``const + sum_j form_j theta_{index j}``."""
    r = len(names)
    terms: dict = {(0,) * r: const.series()}
    for j, c in enumerate(form):
        if c:
            mono = tuple(1 if k == var_pos[j] else 0 for k in range(r))
            _add_into(terms, mono, EpsSeries.const(c))
    return StepDownOperator(names, terms)


def build_annihilator(m: MHF, i: int | str) -> Annihilator:
    """Annihilator from the term ratio ``A(s + e_i)/A(s) = g_i(s)/h_i(s)``.

    ``h_i`` carries the ``(s_i + 1)`` of the factorial. Indices must have
    distinct variable names so that each theta acts on one index.
    """
    if len(set(m.variables)) != m.fold:
        raise UnsupportedForm("annihilators need one index per variable name")
    if isinstance(i, str):
        i = m.variables.index(i)
    names = m.variables
    r = m.fold
    pos = list(range(r))
    if r == 0:
        return Annihilator(StepDownOperator((), {(): EpsSeries.const(1)}), StepDownOperator((), {}), 0)
    g = StepDownOperator.identity(names).scale(EpsSeries.const(m.scales[i]))
    h = _poly_in_theta(names, pos, tuple(1 if j == i else 0 for j in range(r)), EpsLinear(1))
    for side, _, f in m.factors:
        c = f.form[i]
        if c < 0:
            raise UnsupportedForm(f"negative form entry {c}; normalize first")
        for t in range(c):
            lin = _poly_in_theta(names, pos, f.form, f.param + t)
            if side == "num":
                g = g * lin
            else:
                h = h * lin
    return Annihilator(h, g, i)


def annihilator_residual(m: MHF, i: int | str, point: Mapping, n: int = 60, eps=0, dps: int = 40):
    """Numeric value of ``L_i`` applied to ``m`` truncated to ``[0, n]^r``.

    Every lattice coefficient is built exactly and the two parts of ``L_i``
    act on it separately, so the result only vanishes if the annihilator is
    right. What remains is the boundary contribution at ``s_i = n``.
    """
    import itertools

    import mpmath

    from .numeval.core import parse_value, to_mpmath
    from .scalar import as_rational, poch

    L = build_annihilator(m, i)
    e = as_rational(eps)
    k = L.index
    with mpmath.workdps(dps):
        xs = [to_mpmath(parse_value(point[v])) for v in m.variables]
        facs = [(side, f.param.at(e), f.form) for side, _, f in m.factors]
        total = mpmath.mpf(0)
        for s in itertools.product(range(n + 1), repeat=m.fold):
            a = Fraction(1)
            for side, p, form in facs:
                q = poch(p, sum(c * t for c, t in zip(form, s)))
                a = a * q if side == "num" else a / q
            for t, c in zip(s, m.scales):
                a = a * c**t / factorial(t)
            mono = mpmath.mpf(1)
            for x, t in zip(xs, s):
                mono *= x**t
            down = list(s)
            down[k] -= 1
            hv = L.shift_part.evaluate(down, e)
            gv = L.direct_part.evaluate(s, e)
            av = mpmath.mpf(a.numerator) / a.denominator
            # h vanishes at s_k = 0 thanks to its (theta_k + 1) factor
            total += av * (hv * mono / xs[k] - gv * mono) if hv else -av * gv * mono
        return total


# full pipeline --------------------------------------------------------------


def _laurent_one(t: Term, K: int) -> EpsExpansion:
    if t.coeff.is_zero:
        return EpsExpansion({}, K + 1)
    # expand the bare function only as far as the coefficient's valuation requires
    Kf = K - int(t.coeff.valuation)
    bare = Term(EpsSeries.const(1), t.monomial, t.mhf)
    sec, chains = build_secondary(t.mhf)
    depth = sum(c.pole_steps for c in chains)
    if Kf < -depth:
        return EpsExpansion({}, K + 1)
    if not chains:
        out = taylor_expand_terms([bare], Kf)
    else:
        H = compose_chain(chains, sec.variables, Kf + 1)
        G = taylor_expand_terms([Term(EpsSeries.const(1), (), sec)], Kf + depth)
        out = apply_operator(H, G, Kf)
        if t.monomial:
            out = EpsExpansion(
                {k: [Term(u.coeff, _join_mono(u.monomial, t.monomial), u.mhf) for u in ts] for k, ts in out.orders.items()},
                out.truncation,
            )
    if t.coeff != EpsSeries.const(1):
        out = expansion_times_series(out, t.coeff, K)
    return out


def _join_mono(a, b):
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted((k, v) for k, v in d.items() if v))


def laurent_expand_terms(terms: Sequence[Term], K: int) -> EpsExpansion:
    """Laurent coefficients through eps^K of a sum of Terms."""
    parts = [_laurent_one(normalize_term(t), K) for t in terms]
    acc: dict[int, list[Term]] = {}
    for p in parts:
        for k, ts in p.orders.items():
            if k <= K:
                acc.setdefault(k, []).extend(ts)
    return EpsExpansion({k: merge_terms(v) for k, v in acc.items()}, K + 1)


def laurent_expand(m: MHF, K: int) -> EpsExpansion:
    """Laurent coefficients of an MHF from its leading order through eps^K.

    Taylor-type inputs are passed to the Taylor engine unchanged.
    """
    return laurent_expand_terms([Term.of(m)], K)
