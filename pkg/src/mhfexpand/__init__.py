"""Epsilon expansion of multivariable hypergeometric series.

The package represents a series whose coefficients are ratios of Pochhammer
symbols of integer linear forms in the summation indices, with parameters
linear in ``eps``. It expands such a series in ``eps`` symbolically, as
finite sums of series of the same kind with rational coefficients, and
evaluates the results numerically by truncated multi-fold summation.

Modules:
    scalar: exact rationals, eps-linear parameters and truncated eps series.
    mhf: the series data model and Pochhammer identities.
    calculus: parameter derivatives and the Taylor expansion engine.
    laurent: step-down operators for Laurent expansions, annihilators.
    numeval: numeric evaluation, Gamma/power prefactors, finite-difference oracle.
    cli: JSON input schema, shipped worked examples, command line.
"""

from __future__ import annotations

from .calculus import EpsExpansion, taylor_expand, taylor_expand_terms
from .errors import MHFError
from .laurent import annihilator_residual, build_annihilator, classify_singular, laurent_expand, laurent_expand_terms
from .mhf import MHF, PochFactor, Term, canonical_form, normalize
from .numeval import EvalPoint, PrefactorSpec, combine_expansions, eval_expansion, eval_mhf, fd_oracle
from .scalar import EpsLinear, EpsSeries

__version__ = "0.1.0"

__all__ = [
    "EpsExpansion",
    "EpsLinear",
    "EpsSeries",
    "EvalPoint",
    "MHF",
    "MHFError",
    "PochFactor",
    "PrefactorSpec",
    "Term",
    "annihilator_residual",
    "build_annihilator",
    "canonical_form",
    "classify_singular",
    "combine_expansions",
    "eval_expansion",
    "eval_mhf",
    "fd_oracle",
    "laurent_expand",
    "laurent_expand_terms",
    "normalize",
    "taylor_expand",
    "taylor_expand_terms",
]
