"""Evaluation points, truncation and numeric evaluation of MHFs and expansions."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from ..errors import PrecisionLoss
from ..mhf import MHF, Term
from ..scalar import as_rational
from .lattice import CLONGDOUBLE, EXACT, LONGDOUBLE, Backend, FormTable, box_sum, mpfr_backend, poch_ratio_table

__all__ = [
    "EvalPoint",
    "Truncation",
    "parse_value",
    "backend_for",
    "eval_mhf",
    "eval_term",
    "eval_expansion",
    "to_mpmath",
    "clear_cache",
]

DEFAULT_N = 60


def parse_value(v) -> Fraction | float | complex:
    """Read a point coordinate.

    Strings ``"3/10"`` or ``"0.3"`` are exact rationals, ``"f64:0.3"`` is the
    IEEE double nearest to 0.3 taken exactly, and anything containing ``j``
    is a complex double. Dicts ``{"binary64": "0.3"}`` and
    ``{"re": ..., "im": ...}`` are accepted as well.
    """
    if isinstance(v, (Fraction, complex)) or type(v).__name__ in ("mpc", "mpf"):
        return v
    if isinstance(v, bool):
        raise TypeError("booleans are not point values")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return v
    if isinstance(v, dict):
        if "binary64" in v:
            return Fraction(float(v["binary64"]))
        if "re" in v:
            return complex(float(v["re"]), float(v.get("im", 0)))
        if "exact" in v:
            return as_rational(v["exact"])
        raise ValueError(f"unknown value record {v!r}")
    s = str(v).strip()
    if s.startswith("f64:"):
        return Fraction(float(s[4:]))
    if s.startswith("float:"):
        return float(s[6:])
    if "j" in s:
        return complex(s.replace(" ", ""))
    return as_rational(s)


@dataclass(frozen=True)
class EvalPoint:
    """Assignment of numeric values to variable names."""

    assignments: Mapping[str, object]

    def __post_init__(self) -> None:
        object.__setattr__(self, "assignments", {k: parse_value(v) for k, v in dict(self.assignments).items()})

    @classmethod
    def of(cls, **kw) -> "EvalPoint":
        return cls(kw)

    @property
    def mode(self) -> str:
        vals = self.assignments.values()
        if any(isinstance(v, complex) or type(v).__name__ == "mpc" for v in vals):
            return "complex"
        if all(isinstance(v, (Fraction, int)) for v in vals):
            return "exact"
        return "float"

    def __getitem__(self, name: str):
        try:
            return self.assignments[name]
        except KeyError:
            raise KeyError(f"variable {name!r} has no value at this point") from None

    def key(self) -> tuple:
        return tuple(sorted((k, repr(v)) for k, v in self.assignments.items()))


@dataclass(frozen=True)
class Truncation:
    """Upper summation limit, uniform or per variable name."""

    n: int | Mapping[str, int] = DEFAULT_N
    default: int = DEFAULT_N

    def __post_init__(self) -> None:
        if isinstance(self.n, Mapping):
            if any(int(v) < 0 for v in self.n.values()):
                raise ValueError("truncation limits must be >= 0")
            object.__setattr__(self, "n", dict(self.n))
        elif int(self.n) < 0:
            raise ValueError("truncation limits must be >= 0")

    def limit(self, var: str) -> int:
        if isinstance(self.n, dict):
            return int(self.n.get(var, self.default))
        return int(self.n)

    def key(self) -> tuple:
        if isinstance(self.n, dict):
            return tuple(sorted(self.n.items())) + (self.default,)
        return (self.n,)


def _as_trunc(n) -> Truncation:
    if isinstance(n, Truncation):
        return n
    if n is None:
        return Truncation()
    return Truncation(n)


def backend_for(mode: str, prec: int | None = None) -> Backend:
    """Summation backend for a mode name and optional bit precision."""
    if mode == "exact":
        return EXACT
    if mode == "float":
        if prec is None or prec <= 64:
            return LONGDOUBLE
        return mpfr_backend(int(prec))
    if mode == "complex":
        if prec is not None and prec > 64:
            raise ValueError("complex summation is limited to extended double precision")
        return CLONGDOUBLE
    raise ValueError(f"unknown evaluation mode {mode!r}")


def _param_values(m: MHF, eps) -> tuple[list, list]:
    e = None if eps is None else as_rational(eps)
    num, den = [], []
    for side, _, f in m.factors:
        if f.param.b1 != 0 and e is None:
            raise ValueError(f"parameter {f.param} depends on eps; pass an eps value for direct evaluation")
        a = f.param.b0 if e is None else f.param.at(e)
        (num if side == "num" else den).append((a, f.form))
    return num, den


def _build(m: MHF, values: list, limits: list[int], backend: Backend, eps) -> tuple[list[np.ndarray], list[FormTable]]:
    num, den = _param_values(m, eps)
    groups: dict[tuple[int, ...], tuple[list, list]] = {}
    for a, f in num:
        groups.setdefault(f, ([], []))[0].append(a)
    for b, f in den:
        groups.setdefault(f, ([], []))[1].append(b)
    r = m.fold
    single: dict[int, list] = {j: [] for j in range(r)}
    tables: list[FormTable] = []
    for f, (ns, ds) in sorted(groups.items()):
        sup = [i for i, v in enumerate(f) if v]
        if not sup:
            continue
        vmin = sum(min(0, v) * limits[i] for i, v in enumerate(f))
        vmax = sum(max(0, v) * limits[i] for i, v in enumerate(f))
        vals, poison = poch_ratio_table(ns, ds, vmin, vmax, backend)
        if len(sup) == 1:
            single[sup[0]].append((f[sup[0]], vmin, vals, poison))
        else:
            tables.append(FormTable(f, vmin, vals, poison))
    psi = []
    for j in range(r):
        x = values[j]
        w = [backend.from_rational(Fraction(1))]
        for s in range(limits[j]):
            w.append(w[-1] * x / backend.from_rational(Fraction(s + 1)))
        arr = backend.array(w)
        for c, vmin, vals, poison in single[j]:
            idx = c * np.arange(limits[j] + 1) - vmin
            if poison is not None and poison[idx].any():
                from ..errors import DenominatorZero

                s_bad = int(np.flatnonzero(poison[idx])[0])
                raise DenominatorZero(f"denominator Pochhammer vanishes at index {j} = {s_bad}", (j, s_bad))
            arr = arr * vals[idx]
        psi.append(arr)
    return psi, tables


_CACHE: dict = {}
_CACHE_LIMIT = 50_000


def clear_cache() -> None:
    """Forget memoised MHF values."""
    _CACHE.clear()


def _eval_cached(m: MHF, point: EvalPoint, trunc: Truncation, backend: Backend, eps):
    key = (m, point.key(), trunc.key(), backend.name, eps)
    hit = _CACHE.get(key)
    if hit is not None:
        return hit
    with backend.context():
        out = _eval_uncached(m, point, trunc, backend, eps)
    if len(_CACHE) >= _CACHE_LIMIT:
        _CACHE.clear()
    _CACHE[key] = out
    return out


def _eval_uncached(m: MHF, point: EvalPoint, trunc: Truncation, backend: Backend, eps):
    if m.fold == 0:
        return backend.finish(backend.from_rational(Fraction(1)))
    values = []
    for v, c in zip(m.variables, m.scales):
        values.append(backend.from_value(point[v]) * backend.from_rational(c))
    limits = [trunc.limit(v) for v in m.variables]
    psi, tables = _build(m, values, limits, backend, eps)
    out = box_sum(psi, tables, backend)
    if not backend.exact and not _finite(out):
        raise OverflowError(f"non-finite value while summing {m}")
    return out


def _finite(x) -> bool:
    try:
        return bool(np.isfinite(x))
    except TypeError:
        import gmpy2

        return bool(gmpy2.is_finite(x))


def _mode(point: EvalPoint, mode: str | None) -> str:
    pm = point.mode
    if mode is None:
        return pm
    if mode == "exact" and pm != "exact":
        raise ValueError("exact mode needs rational point values")
    if mode == "float" and pm == "complex":
        raise ValueError("float mode cannot take complex point values")
    return mode


def eval_mhf(m: MHF, point: EvalPoint | Mapping, n=None, mode: str | None = None, prec: int | None = None, eps=None):
    """Sum ``m`` over the box ``[0, N]^r``.

    Args:
        m: The series.
        point: Values of the variables.
        n: Truncation (int, per-variable dict or :class:`Truncation`).
        mode: ``"exact"``, ``"float"`` or ``"complex"``; derived from the point
            when omitted.
        prec: Bits for float mode; above 64 a multiprecision backend is used.
        eps: Rational eps value for direct evaluation of eps-dependent inputs.

    Returns:
        ``Fraction`` in exact mode, ``numpy.longdouble``/``clongdouble`` in
        float/complex mode, ``gmpy2.mpfr`` in multiprecision mode.
    """
    if not isinstance(point, EvalPoint):
        point = EvalPoint(point)
    trunc = _as_trunc(n)
    md = _mode(point, mode)
    backend = backend_for(md, prec)
    e = None if eps is None else as_rational(eps)
    return _eval_cached(m, point, trunc, backend, e)


def _monomial_value(t: Term, point: EvalPoint, backend: Backend):
    out = backend.from_rational(Fraction(1))
    for v, e in t.monomial:
        out = out * backend.from_value(point[v]) ** e
    return out


def eval_term(t: Term, point: EvalPoint | Mapping, n=None, mode: str | None = None, prec: int | None = None, eps=None):
    """Value of ``coeff * monomial * mhf``; the coefficient must be a constant unless eps is given."""
    if not isinstance(point, EvalPoint):
        point = EvalPoint(point)
    md = _mode(point, mode)
    backend = backend_for(md, prec)
    if eps is None:
        if not t.coeff.is_constant():
            raise ValueError("coefficient depends on eps; pass an eps value")
        c = t.coeff.coefficient(0) if t.coeff.coeffs else Fraction(0)
    else:
        c = t.coeff.evaluate(eps)
    if c == 0:
        return backend.finish(backend.from_rational(Fraction(0)))
    val = eval_mhf(t.mhf, point, n, md, prec, eps)
    with backend.context():
        if backend.exact:
            val = backend.from_rational(val)
        return backend.finish(backend.from_rational(c) * _monomial_value(t, point, backend) * val)


def eval_expansion(e, point: EvalPoint | Mapping, n=None, mode: str | None = None, prec: int | None = None, cancellation_bits: int | None = None) -> dict[int, object]:
    """Numeric value of every order of an expansion.

    In float modes a :class:`PrecisionLoss` warning is issued when the terms
    of one order cancel by more than ``cancellation_bits`` (default: half the
    working precision).
    """
    if not isinstance(point, EvalPoint):
        point = EvalPoint(point)
    md = _mode(point, mode)
    backend = backend_for(md, prec)
    out: dict[int, object] = {}
    for k in sorted(e.orders):
        scale = 0.0
        vals = [eval_term(t, point, n, md, prec) for t in e.orders[k]]
        with backend.context():
            total = backend.from_rational(Fraction(0))
            for v in vals:
                if backend.exact:
                    v = backend.from_rational(v)
                else:
                    scale += float(abs(v))
                total = total + v
            out[k] = backend.finish(total)
        if not backend.exact and scale > 0:
            bits = prec or 64
            lim = cancellation_bits if cancellation_bits is not None else bits // 2
            mag = float(abs(total))
            if mag == 0 or math.log2(scale / mag) > lim:
                warnings.warn(f"order {k}: summation cancelled more than {lim} bits", PrecisionLoss, stacklevel=2)
    return out


def to_mpmath(v):
    """Convert any evaluation result to an mpmath number without rounding."""
    import mpmath

    if isinstance(v, Fraction):
        return mpmath.mpf(v.numerator) / v.denominator
    if isinstance(v, np.complexfloating):
        return mpmath.mpc(to_mpmath(v.real), to_mpmath(v.imag))
    if isinstance(v, np.floating):
        p, q = v.as_integer_ratio()
        return mpmath.mpf(p) / q
    if isinstance(v, complex):
        return mpmath.mpc(v)
    try:
        import gmpy2

        if isinstance(v, type(gmpy2.mpfr(0))):
            p, q = v.as_integer_ratio()
            return mpmath.mpf(p) / q
    except ImportError:  # pragma: no cover
        pass
    return mpmath.mpmathify(v)
