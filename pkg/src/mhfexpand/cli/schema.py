"""JSON input documents for MHFs and prefactor-weighted sums.

A document is one of

* an MHF object::

      {"variables": ["x", "y"],
       "numerator": [{"param": "3/2", "form": [1, 1]}, ...],
       "denominator": [{"param": "eps-2", "form": [1, 1]}],
       "scales": ["1", "1"]}                       # optional

* a generalized hypergeometric shorthand::

      {"pFq": {"upper": ["3", "2"], "lower": ["eps-3/2"], "variable": "x"}}

* a sum of weighted terms::

      {"sum": [{"mhf": <MHF or pFq>,
                "prefactor": <prefactor>,          # optional
                "eps_power": 1,                    # optional, multiplies by eps^k
                "coefficient": "2"}],              # optional rational
       "inputs": ["x", "y"],                      # optional
       "derived": {"u": "1/(1-x)"}}               # optional

Parameters are strings such as ``"2eps+1"``, numbers, or ``{"b0": .., "b1": ..}``.
A prefactor is::

    {"constant": "1" or ["re", "im"],
     "powers": [{"base": "z1", "exponent": "-eps"}],
     "gammas": [{"arg": "eps", "power": 1}]}

Bases and derived variables are arithmetic expressions over point variables.
The keys ``name``, ``description``, ``citation`` and ``notes`` are allowed on
the top level and ignored. Any other unknown key is an error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping

from ..errors import NormalizationError, SchemaError
from ..mhf import MHF, PochFactor, Term, canonical_form, mhf_to_dict
from ..numeval.prefactor import PrefactorSpec, eval_expr
from ..scalar import EpsLinear, EpsSeries, as_rational, format_rational, parse_eps_linear

__all__ = ["SumEntry", "MHFSum", "parse_spec", "load_document", "spec_to_dict", "as_sum"]

_META = {"name", "description", "citation", "notes"}


@dataclass(frozen=True)
class SumEntry:
    """One ``prefactor * coefficient * eps^k * MHF`` summand."""

    term: Term
    prefactor: PrefactorSpec | None = None


@dataclass(frozen=True)
class MHFSum:
    """Sum of weighted MHFs plus the variables derived from the user inputs."""

    entries: tuple[SumEntry, ...]
    derived: Mapping[str, str] = field(default_factory=dict)
    inputs: tuple[str, ...] = ()

    @property
    def variables(self) -> tuple[str, ...]:
        """Names a point must assign (inputs, or every free variable)."""
        if self.inputs:
            return self.inputs
        names: list[str] = []
        for e in self.entries:
            for v in e.term.mhf.variables:
                if v not in names and v not in self.derived:
                    names.append(v)
        return tuple(names)

    def resolve_point(self, values: Mapping[str, object]) -> dict[str, object]:
        """Add derived variables to a point, exactly when the inputs are rational."""
        out = dict(values)
        for name, expr in self.derived.items():
            try:
                out[name] = eval_expr(expr, out, exact=True)
            except (ValueError, TypeError):
                out[name] = eval_expr(expr, out)
        return out


def _fail(msg: str, loc: str):
    raise SchemaError(msg, loc)


def _expect(v, kind, loc: str, what: str):
    if not isinstance(v, kind) or isinstance(v, bool):
        _fail(f"expected {what}, got {type(v).__name__}", loc)
    return v


def _keys(d: Mapping, allowed: set[str], loc: str, required: set[str] = frozenset()) -> None:
    extra = set(d) - allowed
    if extra:
        _fail(f"unknown key(s) {sorted(extra)}", loc)
    missing = set(required) - set(d)
    if missing:
        _fail(f"missing key(s) {sorted(missing)}", loc)


def _param(v, loc: str) -> EpsLinear:
    try:
        if isinstance(v, bool):
            raise TypeError
        if isinstance(v, str):
            return parse_eps_linear(v)
        if isinstance(v, int):
            return EpsLinear.const(v)
        if isinstance(v, dict):
            _keys(v, {"b0", "b1"}, loc, {"b0"})
            return EpsLinear(as_rational(str(v["b0"])), as_rational(str(v.get("b1", 0))))
    except SchemaError:
        raise
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        _fail(f"bad parameter {v!r} ({exc})" if str(exc) else f"bad parameter {v!r}", loc)
    _fail(f"bad parameter {v!r}; use a string like 'eps-3/2', an integer or {{b0, b1}}", loc)


def _rational(v, loc: str) -> Fraction:
    if isinstance(v, bool) or not isinstance(v, (int, str)):
        _fail(f"expected a rational as integer or string, got {v!r}", loc)
    try:
        return as_rational(v)
    except (ValueError, ZeroDivisionError):
        _fail(f"bad rational {v!r}", loc)


def _factors(items, r: int, loc: str) -> tuple[PochFactor, ...]:
    out = []
    for k, f in enumerate(_expect(items, list, loc, "a list")):
        here = f"{loc}[{k}]"
        _expect(f, dict, here, "an object")
        _keys(f, {"param", "form"}, here, {"param", "form"})
        form = _expect(f["form"], list, f"{here}.form", "a list of integers")
        if len(form) != r:
            _fail(f"form has length {len(form)}, expected {r}", f"{here}.form")
        for j, c in enumerate(form):
            _expect(c, int, f"{here}.form[{j}]", "an integer")
        out.append(PochFactor(_param(f["param"], f"{here}.param"), tuple(form)))
    return tuple(out)


def _mhf(d, loc: str) -> MHF:
    _expect(d, dict, loc, "an object")
    if "pFq" in d:
        _keys(d, {"pFq"}, loc)
        p = _expect(d["pFq"], dict, f"{loc}.pFq", "an object")
        _keys(p, {"upper", "lower", "variable"}, f"{loc}.pFq", {"upper", "lower"})
        var = _expect(p.get("variable", "x"), str, f"{loc}.pFq.variable", "a string")
        up = [_param(a, f"{loc}.pFq.upper[{k}]") for k, a in enumerate(_expect(p["upper"], list, f"{loc}.pFq.upper", "a list"))]
        lo = [_param(b, f"{loc}.pFq.lower[{k}]") for k, b in enumerate(_expect(p["lower"], list, f"{loc}.pFq.lower", "a list"))]
        m = MHF((var,), tuple(PochFactor(a, (1,)) for a in up), tuple(PochFactor(b, (1,)) for b in lo))
        return canonical_form(m)
    _keys(d, {"variables", "numerator", "denominator", "scales"}, loc, {"variables"})
    names = _expect(d["variables"], list, f"{loc}.variables", "a list of names")
    for j, v in enumerate(names):
        _expect(v, str, f"{loc}.variables[{j}]", "a string")
    r = len(names)
    num = _factors(d.get("numerator", []), r, f"{loc}.numerator")
    den = _factors(d.get("denominator", []), r, f"{loc}.denominator")
    scales = ()
    if "scales" in d:
        sc = _expect(d["scales"], list, f"{loc}.scales", "a list")
        if len(sc) != r:
            _fail(f"{len(sc)} scales for {r} variables", f"{loc}.scales")
        scales = tuple(_rational(c, f"{loc}.scales[{j}]") for j, c in enumerate(sc))
        if any(c == 0 for c in scales):
            _fail("scales must be nonzero", f"{loc}.scales")
    try:
        return canonical_form(MHF(tuple(names), num, den, scales))
    except ValueError as exc:
        raise NormalizationError(str(exc), loc) from exc


def _prefactor(d, loc: str) -> PrefactorSpec:
    _expect(d, dict, loc, "an object")
    _keys(d, {"constant", "powers", "gammas"}, loc)
    c = d.get("constant", "1")
    if isinstance(c, list):
        if len(c) != 2:
            _fail("complex constant needs [re, im]", f"{loc}.constant")
        const = (_rational(c[0], f"{loc}.constant[0]"), _rational(c[1], f"{loc}.constant[1]"))
    else:
        const = (_rational(c, f"{loc}.constant"), Fraction(0))
    powers = []
    for k, p in enumerate(_expect(d.get("powers", []), list, f"{loc}.powers", "a list")):
        here = f"{loc}.powers[{k}]"
        _expect(p, dict, here, "an object")
        _keys(p, {"base", "exponent"}, here, {"base", "exponent"})
        base = p["base"]
        if isinstance(base, bool) or not isinstance(base, (str, int)):
            _fail("base must be an expression string or an integer", f"{here}.base")
        powers.append((base, _param(p["exponent"], f"{here}.exponent")))
    gammas = []
    for k, g in enumerate(_expect(d.get("gammas", []), list, f"{loc}.gammas", "a list")):
        here = f"{loc}.gammas[{k}]"
        _expect(g, dict, here, "an object")
        _keys(g, {"arg", "power"}, here, {"arg"})
        pw = g.get("power", 1)
        if pw not in (1, -1) or isinstance(pw, bool):
            _fail("Gamma power must be 1 or -1", f"{here}.power")
        arg = _param(g["arg"], f"{here}.arg")
        if arg.b1 == 0 and arg.b0.denominator == 1 and arg.b0 <= 0:
            raise NormalizationError(f"Gamma({arg}) is a pole with no eps regulator", f"{here}.arg")
        gammas.append((arg, pw))
    return PrefactorSpec(const, tuple(powers), tuple(gammas))


def _entry(d, loc: str) -> SumEntry:
    _expect(d, dict, loc, "an object")
    _keys(d, {"mhf", "prefactor", "eps_power", "coefficient"}, loc, {"mhf"})
    m = _mhf(d["mhf"], f"{loc}.mhf")
    k = _expect(d.get("eps_power", 0), int, f"{loc}.eps_power", "an integer")
    c = _rational(d.get("coefficient", 1), f"{loc}.coefficient")
    if c == 0:
        raise NormalizationError("zero coefficient", f"{loc}.coefficient")
    pre = _prefactor(d["prefactor"], f"{loc}.prefactor") if "prefactor" in d else None
    return SumEntry(Term(EpsSeries.monomial(k, c), (), m), pre)


def _document(d, loc: str = "$") -> MHF | MHFSum:
    _expect(d, dict, loc, "an object")
    body = {k: v for k, v in d.items() if k not in _META}
    if "sum" not in body:
        return _mhf(body, loc)
    _keys(body, {"sum", "inputs", "derived"}, loc)
    items = _expect(body["sum"], list, f"{loc}.sum", "a list")
    if not items:
        _fail("empty sum", f"{loc}.sum")
    entries = tuple(_entry(e, f"{loc}.sum[{k}]") for k, e in enumerate(items))
    derived = _expect(body.get("derived", {}), dict, f"{loc}.derived", "an object")
    for name, expr in derived.items():
        _expect(expr, str, f"{loc}.derived.{name}", "an expression string")
    inputs = _expect(body.get("inputs", []), list, f"{loc}.inputs", "a list")
    for j, v in enumerate(inputs):
        _expect(v, str, f"{loc}.inputs[{j}]", "a string")
    return MHFSum(entries, dict(derived), tuple(inputs))


def load_document(path: str | Path) -> dict:
    """Read JSON, reporting syntax errors with line and column."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read file ({exc.strerror})", str(p)) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(exc.msg, f"{p}:{exc.lineno}:{exc.colno}") from exc


def parse_spec(src: str | Path | Mapping) -> MHF | MHFSum:
    """Parse an input document into a canonical MHF or an :class:`MHFSum`.

    Args:
        src: Path to a JSON file, or an already decoded document.

    Raises:
        SchemaError: structural problems, with a ``file:$.path`` location.
        NormalizationError: valid structure that cannot be normalized.
    """
    if isinstance(src, Mapping):
        return _document(src)
    d = load_document(src)
    try:
        return _document(d)
    except SchemaError as exc:
        cls = type(exc)
        raise cls(str(exc).split(": ", 1)[-1] if exc.location else str(exc), f"{src}:{exc.location}") from exc


def as_sum(x: MHF | MHFSum) -> MHFSum:
    """View a single MHF as a one-entry sum."""
    if isinstance(x, MHFSum):
        return x
    return MHFSum((SumEntry(Term.of(x)),))


def _prefactor_out(s: PrefactorSpec) -> dict:
    re, im = s.constant
    return {
        "constant": format_rational(re) if im == 0 else [format_rational(re), format_rational(im)],
        "powers": [{"base": b, "exponent": str(e)} for b, e in s.power_factors],
        "gammas": [{"arg": str(a), "power": p} for a, p in s.gamma_factors],
    }


def spec_to_dict(x: MHF | MHFSum) -> dict:
    """Inverse of :func:`parse_spec` on canonical inputs."""
    if isinstance(x, MHF):
        d = mhf_to_dict(x)
        for side in ("numerator", "denominator"):
            d[side] = [{"param": str(f.param), "form": list(f.form)} for f in getattr(x, side)]
        return d
    out: dict = {"sum": []}
    for e in x.entries:
        item: dict = {"mhf": spec_to_dict(e.term.mhf)}
        k = e.term.coeff.min_order
        c = e.term.coeff.coefficient(k)
        if k:
            item["eps_power"] = k
        if c != 1:
            item["coefficient"] = format_rational(c)
        if e.prefactor is not None:
            item["prefactor"] = _prefactor_out(e.prefactor)
        out["sum"].append(item)
    if x.inputs:
        out["inputs"] = list(x.inputs)
    if x.derived:
        out["derived"] = dict(x.derived)
    return out
