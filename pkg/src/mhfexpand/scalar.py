"""Exact scalars: rationals, epsilon-linear parameters and truncated Laurent series.

Rationals are :class:`fractions.Fraction`. An :class:`EpsSeries` carries an
explicit exclusive truncation order; ``None`` marks an exact (finite) series.
Arithmetic propagates truncation pessimistically.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

from .errors import IdenticallyZero

__all__ = [
    "Rational",
    "as_rational",
    "format_rational",
    "EpsLinear",
    "EpsSeries",
    "laurent_invert",
    "eps_arith",
    "parse_eps_linear",
    "poch",
]

Rational = Fraction
RationalLike = Union[Fraction, int, str]


def as_rational(v: RationalLike) -> Fraction:
    """Coerce an int, Fraction or ``"p/q"``/decimal string to a Fraction."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v.strip())
    if hasattr(v, "numerator") and hasattr(v, "denominator"):
        return Fraction(int(v.numerator), int(v.denominator))
    raise TypeError(f"cannot interpret {v!r} as an exact rational")


def format_rational(q: Fraction) -> str:
    """Serialize as ``"p/q"`` or ``"p"`` when the denominator is one."""
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def poch(a: Fraction, n: int) -> Fraction:
    """Rising factorial (a)_n for integer n, negative n included."""
    out = Fraction(1)
    if n >= 0:
        for t in range(n):
            out *= a + t
        return out
    for t in range(1, -n + 1):
        d = a - t
        if d == 0:
            raise ZeroDivisionError(f"({a})_{n} has a pole")
        out /= d
    return out


@dataclass(frozen=True, order=True)
class EpsLinear:
    """The parameter ``b0 + b1*eps`` with exact rational parts."""

    b0: Fraction
    b1: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "b0", as_rational(self.b0))
        object.__setattr__(self, "b1", as_rational(self.b1))

    @classmethod
    def const(cls, v: RationalLike) -> "EpsLinear":
        return cls(as_rational(v), Fraction(0))

    @property
    def is_constant(self) -> bool:
        return self.b1 == 0

    @property
    def is_zero(self) -> bool:
        return self.b0 == 0 and self.b1 == 0

    def at(self, eps: RationalLike = 0) -> Fraction:
        return self.b0 + self.b1 * as_rational(eps)

    def at_zero(self) -> "EpsLinear":
        return EpsLinear(self.b0, Fraction(0))

    def __add__(self, other: "EpsLinear | RationalLike") -> "EpsLinear":
        if isinstance(other, EpsLinear):
            return EpsLinear(self.b0 + other.b0, self.b1 + other.b1)
        return EpsLinear(self.b0 + as_rational(other), self.b1)

    __radd__ = __add__

    def __sub__(self, other: "EpsLinear | RationalLike") -> "EpsLinear":
        if isinstance(other, EpsLinear):
            return EpsLinear(self.b0 - other.b0, self.b1 - other.b1)
        return EpsLinear(self.b0 - as_rational(other), self.b1)

    def __rsub__(self, other: RationalLike) -> "EpsLinear":
        return EpsLinear(as_rational(other) - self.b0, -self.b1)

    def __neg__(self) -> "EpsLinear":
        return EpsLinear(-self.b0, -self.b1)

    def scale(self, k: RationalLike) -> "EpsLinear":
        k = as_rational(k)
        return EpsLinear(self.b0 * k, self.b1 * k)

    def series(self) -> "EpsSeries":
        """Exact series ``b0 + b1*eps``."""
        return EpsSeries.from_coeffs([self.b0, self.b1])

    def to_dict(self) -> dict:
        return {"b0": format_rational(self.b0), "b1": format_rational(self.b1)}

    @classmethod
    def from_dict(cls, d: dict) -> "EpsLinear":
        return cls(as_rational(d.get("b0", 0)), as_rational(d.get("b1", 0)))

    def __str__(self) -> str:
        if self.b1 == 0:
            return format_rational(self.b0)
        if self.b1 == 1:
            e = "eps"
        elif self.b1 == -1:
            e = "-eps"
        else:
            e = f"{format_rational(self.b1)}*eps"
        if self.b0 == 0:
            return e
        sign = "-" if self.b0 < 0 else "+"
        return f"{e}{sign}{format_rational(abs(self.b0))}"


_TERM = re.compile(r"[+-]?[^+-]+")


def parse_eps_linear(text: str) -> EpsLinear:
    """Parse strings such as ``"1-eps"``, ``"2*eps+1"`` or ``"3/2"``."""
    s = text.replace(" ", "").replace("ε", "eps")
    if not s:
        raise ValueError("empty parameter expression")
    if _TERM.sub("", s):
        raise ValueError(f"cannot parse parameter {text!r}")
    b0 = Fraction(0)
    b1 = Fraction(0)
    for term in _TERM.findall(s):
        sign = -1 if term[0] == "-" else 1
        body = term.lstrip("+-")
        try:
            if "eps" in body:
                c = body.replace("eps", "").strip("*")
                b1 += sign * (Fraction(c) if c else 1)
            else:
                b0 += sign * Fraction(body)
        except ValueError:
            raise ValueError(f"cannot parse parameter {text!r}") from None
    return EpsLinear(b0, b1)


def _strip(min_order: int, coeffs: list[Fraction], trunc: int | None) -> tuple[int, tuple[Fraction, ...]]:
    if trunc is not None:
        coeffs = coeffs[: max(0, trunc - min_order)]
    lo = 0
    while lo < len(coeffs) and coeffs[lo] == 0:
        lo += 1
    hi = len(coeffs)
    while hi > lo and coeffs[hi - 1] == 0:
        hi -= 1
    if lo == hi:
        return 0, ()
    return min_order + lo, tuple(coeffs[lo:hi])


@dataclass(frozen=True)
class EpsSeries:
    """Dense Laurent series in eps over the rationals.

    Attributes:
        min_order: Power of eps of the first stored coefficient.
        coeffs: Coefficients of ``eps**(min_order + i)``.
        truncation: Exclusive bound on known orders, ``None`` if exact.
    """

    min_order: int = 0
    coeffs: tuple[Fraction, ...] = ()
    truncation: int | None = None

    def __post_init__(self) -> None:
        m, c = _strip(self.min_order, [as_rational(x) for x in self.coeffs], self.truncation)
        object.__setattr__(self, "min_order", m)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_coeffs(cls, coeffs: Iterable[RationalLike], min_order: int = 0, truncation: int | None = None) -> "EpsSeries":
        return cls(min_order, tuple(as_rational(c) for c in coeffs), truncation)

    @classmethod
    def const(cls, c: RationalLike) -> "EpsSeries":
        return cls(0, (as_rational(c),), None)

    @classmethod
    def monomial(cls, k: int, c: RationalLike = 1) -> "EpsSeries":
        return cls(k, (as_rational(c),), None)

    @classmethod
    def zero(cls, truncation: int | None = None) -> "EpsSeries":
        return cls(0, (), truncation)

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def is_exact(self) -> bool:
        return self.truncation is None

    @property
    def valuation(self) -> float:
        """Lowest order that may be nonzero."""
        if self.coeffs:
            return self.min_order
        return math.inf if self.truncation is None else self.truncation

    @property
    def max_order(self) -> int:
        return self.min_order + len(self.coeffs) - 1

    def is_constant(self) -> bool:
        return self.is_zero or (self.min_order == 0 and len(self.coeffs) == 1)

    def coefficient(self, k: int) -> Fraction:
        if self.truncation is not None and k >= self.truncation:
            raise ValueError(f"order {k} lies beyond truncation {self.truncation}")
        i = k - self.min_order
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return Fraction(0)

    def items(self) -> list[tuple[int, Fraction]]:
        return [(self.min_order + i, c) for i, c in enumerate(self.coeffs) if c]

    def truncate(self, truncation: int | None) -> "EpsSeries":
        if truncation is None:
            return self
        t = truncation if self.truncation is None else min(truncation, self.truncation)
        return EpsSeries(self.min_order, self.coeffs, t)

    def __add__(self, other: "EpsSeries | RationalLike") -> "EpsSeries":
        if not isinstance(other, EpsSeries):
            other = EpsSeries.const(other)
        trunc = _min_trunc(self.truncation, other.truncation)
        if self.is_zero:
            return other.truncate(trunc)
        if other.is_zero:
            return self.truncate(trunc)
        lo = min(self.min_order, other.min_order)
        hi = max(self.max_order, other.max_order)
        out = [Fraction(0)] * (hi - lo + 1)
        for k, c in enumerate(self.coeffs):
            out[self.min_order - lo + k] += c
        for k, c in enumerate(other.coeffs):
            out[other.min_order - lo + k] += c
        return EpsSeries(lo, tuple(out), trunc)

    __radd__ = __add__

    def __neg__(self) -> "EpsSeries":
        return EpsSeries(self.min_order, tuple(-c for c in self.coeffs), self.truncation)

    def __sub__(self, other: "EpsSeries | RationalLike") -> "EpsSeries":
        if not isinstance(other, EpsSeries):
            other = EpsSeries.const(other)
        return self + (-other)

    def __rsub__(self, other: RationalLike) -> "EpsSeries":
        return EpsSeries.const(other) - self

    def __mul__(self, other: "EpsSeries | RationalLike") -> "EpsSeries":
        if not isinstance(other, EpsSeries):
            k = as_rational(other)
            if k == 0:
                return EpsSeries.zero(self.truncation)
            return EpsSeries(self.min_order, tuple(c * k for c in self.coeffs), self.truncation)
        va, vb = self.valuation, other.valuation
        cands = []
        if self.truncation is not None:
            cands.append(self.truncation + vb)
        if other.truncation is not None:
            cands.append(other.truncation + va)
        trunc = None
        if cands:
            t = min(cands)
            trunc = None if t == math.inf else int(t)
        if self.is_zero or other.is_zero:
            return EpsSeries.zero(trunc)
        n = len(self.coeffs) + len(other.coeffs) - 1
        if trunc is not None:
            n = min(n, max(0, trunc - self.min_order - other.min_order))
        out = [Fraction(0)] * n
        for i, a in enumerate(self.coeffs):
            if i >= n or not a:
                continue
            for j, b in enumerate(other.coeffs[: n - i]):
                out[i + j] += a * b
        return EpsSeries(self.min_order + other.min_order, tuple(out), trunc)

    __rmul__ = __mul__

    def __truediv__(self, other: "EpsSeries | RationalLike") -> "EpsSeries":
        if isinstance(other, EpsSeries):
            return self * laurent_invert(other)
        return self * (1 / as_rational(other))

    def shift(self, k: int) -> "EpsSeries":
        """Multiply by ``eps**k``."""
        t = None if self.truncation is None else self.truncation + k
        return EpsSeries(self.min_order + k, self.coeffs, t)

    def derivative(self) -> "EpsSeries":
        t = None if self.truncation is None else self.truncation - 1
        out = [(self.min_order + i) * c for i, c in enumerate(self.coeffs)]
        return EpsSeries(self.min_order - 1, tuple(out), t)

    def value_at_zero(self) -> Fraction:
        """Constant term; requires the series to be regular at eps = 0."""
        if self.coeffs and self.min_order < 0:
            raise ValueError("series has a pole at eps = 0")
        return self.coefficient(0)

    def evaluate(self, eps: RationalLike) -> Fraction:
        """Sum the stored coefficients at a rational eps."""
        e = as_rational(eps)
        return sum((c * e ** (self.min_order + i) for i, c in enumerate(self.coeffs)), Fraction(0))

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = EpsSeries.const(other)
        if not isinstance(other, EpsSeries):
            return NotImplemented
        return (self.min_order, self.coeffs, self.truncation) == (other.min_order, other.coeffs, other.truncation)

    def __hash__(self) -> int:
        return hash((self.min_order, self.coeffs, self.truncation))

    def equal_within(self, other: "EpsSeries") -> bool:
        """Equality of coefficients up to the common truncation."""
        d = self - other
        return d.is_zero

    def to_dict(self) -> dict:
        return {
            "min_order": self.min_order,
            "coeffs": [format_rational(c) for c in self.coeffs],
            "truncation": self.truncation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EpsSeries":
        return cls(int(d.get("min_order", 0)), tuple(as_rational(c) for c in d.get("coeffs", [])), d.get("truncation"))

    def __str__(self) -> str:
        parts = []
        for k, c in self.items():
            cs = format_rational(c)
            if k == 0:
                parts.append(cs)
            else:
                e = "eps" if k == 1 else f"eps^{k}"
                parts.append(e if c == 1 else f"-{e}" if c == -1 else f"{cs}*{e}")
        s = " + ".join(parts).replace("+ -", "- ") if parts else "0"
        if self.truncation is not None:
            s += f" + O(eps^{self.truncation})"
        return s

    def __repr__(self) -> str:
        return f"EpsSeries({self})"


def _min_trunc(a: int | None, b: int | None) -> int | None:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def laurent_invert(s: EpsSeries, truncation: int | None = None) -> EpsSeries:
    """Multiplicative inverse of a Laurent series.

    Args:
        s: Series to invert.
        truncation: Exclusive target order; needed when ``s`` is exact but
            not a monomial, since the inverse is then an infinite series.

    Raises:
        IdenticallyZero: if ``s`` has no nonzero coefficient.
    """
    if s.is_zero:
        raise IdenticallyZero("cannot invert a series that vanishes within its truncation")
    m = s.min_order
    c = s.coeffs
    if len(c) == 1 and s.truncation is None:
        return EpsSeries(-m, (1 / c[0],), None).truncate(truncation)
    limits = []
    if s.truncation is not None:
        limits.append(s.truncation - 2 * m)
    if truncation is not None:
        limits.append(truncation)
    if not limits:
        raise ValueError("inverse of an exact non-monomial series needs an explicit truncation")
    trunc = min(limits)
    n = trunc + m
    inv0 = 1 / c[0]
    d: list[Fraction] = []
    for k in range(max(0, n)):
        acc = Fraction(1) if k == 0 else Fraction(0)
        for j in range(1, min(k, len(c) - 1) + 1):
            acc -= c[j] * d[k - j]
        d.append(acc * inv0)
    return EpsSeries(-m, tuple(d), trunc)


def eps_arith(a: EpsSeries, b: EpsSeries, op: str) -> EpsSeries:
    """Add or multiply two series; ``op`` is ``"add"`` or ``"mul"``."""
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown operation {op!r}")
