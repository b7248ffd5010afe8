"""Finite-difference oracle: eps-series coefficients by polynomial fitting.

The oracle evaluates an MHF directly at a stencil of small rational eps values
and fits a polynomial in eps. It shares no code with the symbolic expansion
and is meant only for cross-checks.
"""

from __future__ import annotations

import warnings
from fractions import Fraction
from typing import Mapping

import mpmath

from ..errors import IllConditioned
from ..mhf import MHF, Term
from .core import EvalPoint, eval_mhf, to_mpmath

__all__ = ["eps_stencil", "fd_oracle"]


def eps_stencil(size: int, h: Fraction = Fraction(1, 1000)) -> list[Fraction]:
    """``size`` symmetric pairs ``±h·2^-j``."""
    if size < 1:
        raise ValueError("stencil needs at least one pair")
    out = []
    for j in range(size):
        e = Fraction(h) / 2**j
        out += [e, -e]
    return out


def _fit(eps: list[Fraction], vals: list) -> list:
    n = len(eps)
    a = mpmath.matrix(n, n)
    for i, e in enumerate(eps):
        x = mpmath.mpf(e.numerator) / e.denominator
        for k in range(n):
            a[i, k] = x**k
    c = mpmath.lu_solve(a, mpmath.matrix(vals))
    return [c[k] for k in range(n)]


def fd_oracle(
    m: MHF | Term,
    point: EvalPoint | Mapping,
    n=None,
    K: int = 2,
    pole_depth: int = 0,
    *,
    h: Fraction = Fraction(1, 1000),
    size: int = 6,
    prec: int = 256,
    rtol: float = 1e-8,
) -> dict[int, object]:
    """Coefficients of orders ``-pole_depth..K`` of ``m`` by fitting.

    ``eps**pole_depth * m(eps)`` is evaluated at ``eps_stencil(size, h)`` and
    at a stencil one pair smaller. Both fits are compared and an
    :class:`IllConditioned` warning is issued when any returned coefficient
    differs by more than ``rtol`` relative to the largest one.

    Returns:
        Map from eps order to an mpmath number.
    """
    if not isinstance(point, EvalPoint):
        point = EvalPoint(point)
    term = m if isinstance(m, Term) else Term.of(m)
    mode = "complex" if point.mode == "complex" else "float"
    p = None if mode == "complex" else prec
    top = K + pole_depth
    if 2 * (size - 1) <= top:
        raise ValueError(f"stencil of {size} pairs is too small for {top + 1} coefficients")

    def g(e: Fraction):
        v = to_mpmath(eval_mhf(term.mhf, point, n, mode, p, eps=e))
        mono = mpmath.mpf(1)
        for var, k in term.monomial:
            mono *= to_mpmath(point[var]) ** k
        c = term.coeff.evaluate(e)
        return v * mono * (mpmath.mpf(c.numerator) / c.denominator) * (mpmath.mpf(e.numerator) / e.denominator) ** pole_depth

    with mpmath.workprec(max(prec, 53) + 64):
        big = eps_stencil(size, h)
        vals = {e: g(e) for e in big}
        fine = _fit(big, [vals[e] for e in big])
        small = eps_stencil(size - 1, h)
        coarse = _fit(small, [vals[e] for e in small])
        scale = max(abs(c) for c in fine[: top + 1]) or mpmath.mpf(1)
        worst = max(abs(fine[k] - coarse[k]) for k in range(top + 1)) / scale
        if worst > rtol:
            warnings.warn(f"finite-difference fit unstable: relative spread {mpmath.nstr(worst, 3)}", IllConditioned, stacklevel=2)
        return {k - pole_depth: +fine[k] for k in range(top + 1)}
