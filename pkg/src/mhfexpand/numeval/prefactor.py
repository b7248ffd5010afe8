"""Numeric eps-series of Gamma/power prefactors and of prefactor-weighted sums."""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import mpmath

from ..errors import GammaPoleUnhandled
from ..scalar import EpsLinear, as_rational, parse_eps_linear

__all__ = [
    "NumSeries",
    "PrefactorSpec",
    "prefactor_expand",
    "eval_expr",
    "combine_expansions",
    "symbolic_leading",
    "prefactor_value",
]


@dataclass(frozen=True)
class NumSeries:
    """Truncated Laurent series with mpmath coefficients, known below ``truncation``."""

    min_order: int
    coeffs: tuple
    truncation: int

    def __post_init__(self) -> None:
        n = max(0, self.truncation - self.min_order)
        cs = tuple(self.coeffs)[:n]
        cs = cs + (mpmath.mpf(0),) * (n - len(cs))
        object.__setattr__(self, "coeffs", cs)

    @classmethod
    def const(cls, c, truncation: int) -> "NumSeries":
        return cls(0, (mpmath.mpmathify(c),), truncation)

    def coefficient(self, k: int):
        i = k - self.min_order
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        if k >= self.truncation:
            raise ValueError(f"eps^{k} lies beyond the truncation eps^{self.truncation}")
        return mpmath.mpf(0)

    def items(self) -> list[tuple[int, object]]:
        return [(self.min_order + i, c) for i, c in enumerate(self.coeffs)]

    def __mul__(self, other: "NumSeries") -> "NumSeries":
        v = self.min_order + other.min_order
        t = min(self.truncation + other.min_order, other.truncation + self.min_order)
        out = [mpmath.mpf(0)] * max(0, t - v)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                if i + j < len(out):
                    out[i + j] += a * b
        return NumSeries(v, tuple(out), t)

    def __add__(self, other: "NumSeries") -> "NumSeries":
        v = min(self.min_order, other.min_order)
        t = min(self.truncation, other.truncation)
        return NumSeries(v, tuple(self.coefficient(k) + other.coefficient(k) for k in range(v, t)), t)

    def scale(self, c) -> "NumSeries":
        return NumSeries(self.min_order, tuple(c * a for a in self.coeffs), self.truncation)

    def shift(self, k: int) -> "NumSeries":
        return NumSeries(self.min_order + k, self.coeffs, self.truncation + k)

    def evaluate(self, eps):
        return mpmath.fsum(c * mpmath.mpf(eps) ** k for k, c in self.items())


def _exp_series(s: Sequence, n: int) -> list:
    """``exp`` of a power series with zero constant term, first ``n`` coefficients."""
    out = [mpmath.mpf(0)] * n
    if n == 0:
        return out
    out[0] = mpmath.mpf(1)
    # e' = s' e
    for k in range(1, n):
        acc = mpmath.mpf(0)
        for j in range(1, k + 1):
            if j < len(s):
                acc += j * s[j] * out[k - j]
        out[k] = acc / k
    return out


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: operator.pow}


def eval_expr(expr: str | int | float | Fraction, env: Mapping[str, object], exact: bool = False):
    """Evaluate an arithmetic expression over point values.

    Only numbers, names, ``+ - * / **``, unary minus, ``sqrt``, ``log``,
    ``pi`` and ``I`` (imaginary unit) are accepted. With ``exact=True`` the
    result is a ``Fraction``; names must then hold rationals, powers must be
    integers, and ``sqrt``, ``log``, ``pi``, ``I`` raise ``ValueError``.
    """
    if not isinstance(expr, str):
        return as_rational(expr) if exact else _mp(expr)
    tree = ast.parse(expr, mode="eval")

    def num(v):
        if exact:
            if not isinstance(v, (int, Fraction)):
                raise ValueError(f"{v!r} is not rational")
            return Fraction(v)
        return _mp(v)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            if exact:
                return Fraction(repr(node.value))
            return mpmath.mpf(repr(node.value))
        if isinstance(node, ast.Name):
            if node.id in ("I", "pi"):
                if exact:
                    raise ValueError(f"{node.id} is not rational")
                return mpmath.mpc(0, 1) if node.id == "I" else +mpmath.pi
            if node.id not in env:
                raise KeyError(f"unknown name {node.id!r} in {expr!r}")
            return num(env[node.id])
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            a, b = ev(node.left), ev(node.right)
            if exact and isinstance(node.op, ast.Pow):
                if b.denominator != 1:
                    raise ValueError("non-integer power is not rational")
                b = int(b)
            return _BINOPS[type(node.op)](a, b)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in ("sqrt", "log") and len(node.args) == 1:
            if exact:
                raise ValueError(f"{node.func.id} is not rational")
            return getattr(mpmath, node.func.id)(ev(node.args[0]))
        raise ValueError(f"unsupported expression element in {expr!r}")

    return ev(tree)


def _mp(v):
    from .core import to_mpmath

    if isinstance(v, Fraction):
        return mpmath.mpf(v.numerator) / v.denominator
    if isinstance(v, int):
        return mpmath.mpf(v)
    return to_mpmath(v)


@dataclass(frozen=True)
class PrefactorSpec:
    """``constant * prod base^exponent * prod Gamma(arg)^power``.

    ``constant`` is a pair of rationals (real, imaginary part); bases are
    numbers or expressions over point variables; exponents and Gamma
    arguments are eps-linear.
    """

    constant: tuple[Fraction, Fraction] = (Fraction(1), Fraction(0))
    power_factors: tuple[tuple[object, EpsLinear], ...] = ()
    gamma_factors: tuple[tuple[EpsLinear, int], ...] = ()

    def __post_init__(self) -> None:
        c = self.constant
        if not isinstance(c, (tuple, list)):
            c = (c, 0)
        object.__setattr__(self, "constant", (as_rational(c[0]), as_rational(c[1])))
        object.__setattr__(self, "power_factors", tuple((b, _lin(e)) for b, e in self.power_factors))
        gf = []
        for a, p in self.gamma_factors:
            if int(p) not in (1, -1):
                raise ValueError("Gamma powers must be +1 or -1")
            gf.append((_lin(a), int(p)))
        object.__setattr__(self, "gamma_factors", tuple(gf))

    @property
    def pole_gammas(self) -> tuple[EpsLinear, ...]:
        """Gamma arguments whose eps-free part is a non-positive integer."""
        return tuple(a for a, _ in self.gamma_factors if a.b0.denominator == 1 and a.b0 <= 0)

    @property
    def pole_depth(self) -> int:
        """Net order of the eps pole contributed by the Gamma factors."""
        return sum(p for a, p in self.gamma_factors if a.b0.denominator == 1 and a.b0 <= 0)

    def rational_leading(self) -> tuple[int, Fraction] | None:
        """Leading eps order and coefficient when that coefficient is rational.

        Returns ``None`` when a power has a nonzero eps-free exponent, a
        regular Gamma sits at a non-integer, or the constant is complex.
        """
        if self.constant[1] != 0:
            return None
        c = self.constant[0]
        order = 0
        for _, e in self.power_factors:
            if e.b0 != 0:
                return None
        for a, p in self.gamma_factors:
            if a.b0.denominator != 1:
                return None
            if a.b0 > 0:
                c *= Fraction(math.factorial(int(a.b0) - 1)) ** p
                continue
            if a.b1 == 0:
                raise GammaPoleUnhandled(f"Gamma({a}) is a pole independent of eps")
            for j in range(int(-a.b0) + 1):
                u = a.b0 + j
                c /= (a.b1 if u == 0 else u) ** p
            order -= p
        return order, c

    def to_dict(self) -> dict:
        from ..scalar import format_rational

        return {
            "constant": [format_rational(self.constant[0]), format_rational(self.constant[1])],
            "powers": [{"base": b if isinstance(b, str) else str(b), "exponent": e.to_dict()} for b, e in self.power_factors],
            "gammas": [{"arg": a.to_dict(), "power": p} for a, p in self.gamma_factors],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "PrefactorSpec":
        c = d.get("constant", [1, 0])
        return cls(
            tuple(c) if isinstance(c, (list, tuple)) else (c, 0),
            tuple((p["base"], p["exponent"]) for p in d.get("powers", [])),
            tuple((g["arg"], g.get("power", 1)) for g in d.get("gammas", [])),
        )

    def __str__(self) -> str:
        from ..scalar import format_rational

        re, im = self.constant
        parts = [format_rational(re) if not im else f"({format_rational(re)}+{format_rational(im)}i)"]
        parts += [f"({b})^({e})" for b, e in self.power_factors]
        parts += [f"Gamma({a})" if p == 1 else f"Gamma({a})^-1" for a, p in self.gamma_factors]
        return " * ".join(parts)

    def __mul__(self, other: "PrefactorSpec") -> "PrefactorSpec":
        a, b = self.constant, other.constant
        c = (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])
        return PrefactorSpec(c, self.power_factors + other.power_factors, self.gamma_factors + other.gamma_factors)


def _lin(v) -> EpsLinear:
    if isinstance(v, EpsLinear):
        return v
    if isinstance(v, Mapping):
        return EpsLinear.from_dict(v)
    if isinstance(v, str):
        return parse_eps_linear(v)
    return EpsLinear.const(v)


def _gamma_log_series(c, a1, n: int) -> list:
    """Coefficients of ``ln Gamma(c + a1*eps) - ln Gamma(c)`` up to ``eps^(n-1)``."""
    out = [mpmath.mpf(0)] * n
    for k in range(1, n):
        out[k] = mpmath.polygamma(k - 1, c) * _mp(a1) ** k / mpmath.factorial(k)
    return out


def prefactor_expand(s: PrefactorSpec, point: Mapping | None = None, K: int = 2, dps: int = 40) -> NumSeries:
    """Laurent series of a prefactor through eps^K.

    Each Gamma with a pole at eps = 0 is rewritten as
    ``Gamma(1 + a1*eps) / prod_j (b0 + j + a1*eps)`` so that its pole becomes an
    explicit eps power; regular parts go through the log series of Gamma and
    are exponentiated. Powers use the principal logarithm.

    Raises:
        GammaPoleUnhandled: for a Gamma at a non-positive integer with no eps.
    """
    env = dict(getattr(point, "assignments", point) or {})
    with mpmath.workdps(dps):
        offset = 0
        rational_factors: list[tuple[Fraction, Fraction]] = []  # linear factors u + v*eps, power -1 or +1
        logs = [mpmath.mpf(0)] * (K + 8)
        const = mpmath.mpc(_mp(s.constant[0]), _mp(s.constant[1]))
        if s.constant[1] == 0:
            const = const.real
        lead = const
        for base, e in s.power_factors:
            b = eval_expr(base, env)
            if b == 0:
                raise ZeroDivisionError(f"power base {base!r} vanishes")
            lb = mpmath.log(b)
            lead = lead * mpmath.power(b, _mp(e.b0)) if e.b0 != 0 else lead
            logs[1] += _mp(e.b1) * lb
        for a, p in s.gamma_factors:
            b0, b1 = a.b0, a.b1
            if b0.denominator == 1 and b0 <= 0:
                if b1 == 0:
                    raise GammaPoleUnhandled(f"Gamma({a}) is a pole independent of eps")
                # Gamma(b0 + b1 e) = Gamma(1 + b1 e) / prod_{j=0}^{-b0} (b0 + j + b1 e)
                c = mpmath.mpf(1)
                for j in range(int(-b0) + 1):
                    u = b0 + j
                    if u == 0:
                        offset -= p
                        lead = lead / _mp(b1) ** p
                    else:
                        lead = lead / _mp(u) ** p
                        rational_factors.append((Fraction(b1) / u, -p))
            else:
                c = _mp(b0)
                lead = lead * mpmath.gamma(c) ** p
            g = _gamma_log_series(c, b1, len(logs))
            for k in range(1, len(logs)):
                logs[k] += p * g[k]
        # (1 + r*eps)^q contributes q * sum (-1)^(k+1) r^k eps^k / k
        for r, q in rational_factors:
            for k in range(1, len(logs)):
                logs[k] += q * (-1) ** (k + 1) * _mp(r) ** k / k
        n = K - offset + 1
        if n <= 0:
            return NumSeries(offset, (), K + 1)
        ex = _exp_series(logs, n)
        coeffs = tuple(lead * c for c in ex)
        return NumSeries(offset, coeffs, K + 1)


def prefactor_value(s: PrefactorSpec, point: Mapping | None, eps, dps: int = 40):
    """Direct numeric value of a prefactor at a fixed eps."""
    env = dict(getattr(point, "assignments", point) or {})
    with mpmath.workdps(dps):
        e = _mp(eps)
        out = mpmath.mpc(_mp(s.constant[0]), _mp(s.constant[1])) if s.constant[1] else _mp(s.constant[0])
        for base, x in s.power_factors:
            out *= mpmath.power(eval_expr(base, env), _mp(x.b0) + _mp(x.b1) * e)
        for a, p in s.gamma_factors:
            out *= mpmath.gamma(_mp(a.b0) + _mp(a.b1) * e) ** p
        return out


def symbolic_leading(pairs) -> tuple[int, list] | None:
    """Lowest eps order of ``sum_i g_i * S_i`` as merged exact terms.

    Only possible when every prefactor has a rational leading coefficient;
    returns ``None`` otherwise. An empty term list means that order vanishes
    identically.
    """
    from ..calculus import merge_terms

    parts = []
    for spec, e in pairs:
        lead = spec.rational_leading()
        if lead is None:
            return None
        if not e.orders:
            continue
        lo = min(e.orders)
        parts.append((lead[0] + lo, lead[1], e.orders[lo]))
    if not parts:
        return None
    low = min(p[0] for p in parts)
    terms = [t.with_coeff(t.coeff * c) for o, c, ts in parts if o == low for t in ts]
    return low, merge_terms(terms)


def combine_expansions(pairs, point, n=None, K: int = 0, mode: str | None = None, prec: int | None = None, dps: int = 40) -> NumSeries:
    """Numeric Laurent series of ``sum_i g_i * S_i`` through eps^K.

    Args:
        pairs: Sequence of ``(PrefactorSpec, EpsExpansion)``; each expansion
            must reach eps^(K - leading order of its prefactor).
        point: Evaluation point for the expansions and prefactor bases.
        n: Truncation passed to the summation.
    """
    from ..calculus import EpsExpansion
    from .core import EvalPoint, eval_expansion

    if not isinstance(point, EvalPoint):
        point = EvalPoint(point)
    total = None
    with mpmath.workdps(dps):
        for spec, e in pairs:
            g = prefactor_expand(spec, point, K - (e.min_order or 0), dps)
            need = K - g.min_order
            if e.truncation <= need:
                from ..errors import TruncationTooShallow

                raise TruncationTooShallow(f"expansion known below eps^{e.truncation}; eps^{need} is needed")
            used = EpsExpansion({k: v for k, v in e.orders.items() if k <= need}, e.truncation)
            vals = eval_expansion(used, point, n, mode, prec)
            svals = [_mp(vals.get(k, 0)) for k in range(e.min_order or 0, need + 1)]
            ser = NumSeries(e.min_order or 0, tuple(svals), need + 1)
            part = g * ser
            part = NumSeries(part.min_order, part.coeffs, min(part.truncation, K + 1))
            total = part if total is None else total + part
    return total if total is not None else NumSeries(0, (), K + 1)
