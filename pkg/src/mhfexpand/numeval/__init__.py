"""Numeric evaluation: box sums, prefactor series and the finite-difference oracle."""

from .core import EvalPoint, Truncation, backend_for, clear_cache, eval_expansion, eval_mhf, eval_term, parse_value, to_mpmath
from .oracle import eps_stencil, fd_oracle
from .prefactor import NumSeries, PrefactorSpec, combine_expansions, eval_expr, prefactor_expand, prefactor_value, symbolic_leading

__all__ = [
    "EvalPoint",
    "NumSeries",
    "PrefactorSpec",
    "Truncation",
    "backend_for",
    "clear_cache",
    "combine_expansions",
    "eps_stencil",
    "eval_expansion",
    "eval_expr",
    "eval_mhf",
    "eval_term",
    "fd_oracle",
    "parse_value",
    "prefactor_expand",
    "prefactor_value",
    "symbolic_leading",
    "to_mpmath",
]
