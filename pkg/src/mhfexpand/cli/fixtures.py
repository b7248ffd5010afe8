"""Shipped worked examples and the verification runner.

A fixture file holds a case::

    {"name": "gauss-integer",
     "title": "...",
     "citation": "...",
     "input": <document accepted by parse_spec>,
     "order": 3,
     "checks": [<check>, ...]}

and every check evaluates the expansion (or the function itself) at one point::

    {"id": "x=1/10",
     "point": {"x": "1/10"},
     "trunc": 200,
     "mode": "exact" | "float" | "complex",
     "prec": 128,                               # optional, float mode bits
     "dps": 40,                                 # optional, decimal digits for prefactors
     "order": 3,                                # optional, defaults to the case order
     "quantities": [<quantity>, ...]}

A quantity compares one computed number with a reference::

    {"what": "coefficient" | "weighted" | "series" | "direct" | "series-direct" | "symbolic-zero",
     "order": 0,                                # coefficient, weighted, symbolic-zero
     "eps": "f64:1e-4",                         # weighted, series, direct, series-direct
     "direct_trunc": 60,                        # direct, series-direct (default: trunc)
     "ref": "0.0057506" or {"re": .., "im": ..},
     "kind": "abs" | "rel" | "printed" | "bound",
     "tol": 1e-6,
     "cite": "...",
     "expect": "fail"}                          # optional, a documented discrepancy

``weighted`` is ``C_k * eps^k``, ``series`` the sum of the weighted
coefficients through the check order, and ``direct`` the input evaluated at
fixed ``eps``. ``printed`` accepts half a unit in the last printed digit of
``ref``, separately for real and imaginary parts. ``bound`` requires
``|value| < tol``. A quantity marked ``"expect": "fail"`` records a
reference that cannot be met; it is reported as ``xfail`` and counts as a
failure if it ever agrees.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Mapping

import mpmath

from ..calculus import EpsExpansion
from ..errors import SchemaError
from ..laurent import laurent_expand_terms
from ..numeval.core import EvalPoint, eval_mhf, parse_value, to_mpmath
from ..numeval.prefactor import PrefactorSpec, combine_expansions, prefactor_value, symbolic_leading
from .schema import MHFSum, as_sum, parse_spec

__all__ = [
    "CaseFixture",
    "CheckResult",
    "CaseReport",
    "VerifyReport",
    "list_cases",
    "load_case",
    "run_case",
    "run_verify",
    "expand_sum",
    "evaluate_sum",
    "direct_value",
    "printed_tolerance",
]

_DPS = 40


@dataclass(frozen=True)
class CaseFixture:
    """A worked example with reference values."""

    name: str
    title: str
    citation: str
    spec: MHFSum
    order: int
    checks: tuple[dict, ...]
    source: str = ""


@dataclass
class CheckResult:
    case: str
    check: str
    quantity: str
    computed: str
    reference: str
    kind: str
    tol: str
    matched: bool
    trunc: object
    seconds: float
    cite: str = ""
    error: str = ""
    expected_fail: bool = False

    @property
    def passed(self) -> bool:
        """A known discrepancy passes only while it stays a discrepancy."""
        if self.error:
            return False
        return self.matched != self.expected_fail


@dataclass
class CaseReport:
    name: str
    results: list[CheckResult] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)


@dataclass
class VerifyReport:
    cases: list[CaseReport]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "cases": [
                {"name": c.name, "passed": c.passed, "seconds": round(c.seconds, 3), "results": [dict(asdict(r), passed=r.passed) for r in c.results]} for c in self.cases
            ],
        }

    def format_text(self) -> str:
        lines = []
        for c in self.cases:
            lines.append(f"{'PASS' if c.passed else 'FAIL'} {c.name} ({c.seconds:.1f} s)")
            for r in c.results:
                tag = ("xfail" if r.expected_fail else "ok   ") if r.passed else ("XPASS" if r.expected_fail and not r.error else "BAD  ")
                msg = f"  {tag} {r.check} {r.quantity}: {r.computed}"
                if r.kind != "zero":
                    msg += f" vs {r.reference} [{r.kind} {r.tol}]"
                if r.error:
                    msg += f" error: {r.error}"
                lines.append(msg + f" N={r.trunc}")
        lines.append("all passed" if self.passed else "some checks FAILED")
        return "\n".join(lines)


# loading --------------------------------------------------------------------


def _fixture_dir():
    return resources.files("mhfexpand") / "fixtures"


def list_cases() -> list[str]:
    """Names of the shipped cases."""
    return sorted(p.name[:-5] for p in _fixture_dir().iterdir() if p.name.endswith(".json"))


def load_case(name_or_path: str | Path) -> CaseFixture:
    """Load a shipped case by name, or any fixture file by path."""
    p = Path(name_or_path)
    if p.suffix == ".json" and p.exists():
        text, src = p.read_text(), str(p)
    else:
        if str(name_or_path) not in list_cases():
            raise KeyError(f"unknown case {name_or_path!r}; known: {', '.join(list_cases())}")
        f = _fixture_dir() / f"{name_or_path}.json"
        text, src = f.read_text(), f"fixtures/{name_or_path}.json"
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(exc.msg, f"{src}:{exc.lineno}:{exc.colno}") from exc
    for key in ("name", "input", "order", "checks"):
        if key not in d:
            raise SchemaError(f"missing key {key!r}", f"{src}:$")
    try:
        spec = as_sum(parse_spec(d["input"]))
    except SchemaError as exc:
        raise type(exc)(str(exc), f"{src}:$.input") from exc
    return CaseFixture(d["name"], d.get("title", ""), d.get("citation", ""), spec, int(d["order"]), tuple(d["checks"]), src)


# computation ----------------------------------------------------------------


def _prefactor(e) -> PrefactorSpec:
    return e.prefactor if e.prefactor is not None else PrefactorSpec()


def expand_sum(spec: MHFSum, K: int) -> list[tuple[PrefactorSpec, EpsExpansion]]:
    """Expand every entry far enough for eps^K of the weighted sum."""
    out = []
    for e in spec.entries:
        g = _prefactor(e)
        out.append((g, laurent_expand_terms([e.term], K + max(0, g.pole_depth))))
    return out


def _point(spec: MHFSum, values: Mapping) -> EvalPoint:
    parsed = {k: parse_value(v) for k, v in values.items()}
    missing = [v for v in spec.variables if v not in parsed]
    if missing:
        raise SchemaError(f"point lacks value(s) for {missing}")
    return EvalPoint(spec.resolve_point(parsed))


def evaluate_sum(pairs, point: EvalPoint, n, K: int, mode: str | None = None, prec: int | None = None, dps: int = _DPS) -> dict[int, object]:
    """Numeric Laurent coefficients through eps^K of an expanded sum."""
    ser = combine_expansions(pairs, point, n, K, mode, prec, dps)
    return dict(ser.items())


def direct_value(spec: MHFSum, point: EvalPoint, eps, n, mode: str | None = None, prec: int | None = None):
    """The input evaluated at a fixed rational eps, at the current mpmath precision."""
    e = parse_value(eps)
    if not isinstance(e, Fraction):
        raise ValueError("direct evaluation needs a rational eps (use 'f64:' for a double)")
    md = mode or point.mode
    total = mpmath.mpf(0)
    for entry in spec.entries:
        t = entry.term
        c = t.coeff.evaluate(e)
        if c == 0:
            continue
        v = to_mpmath(eval_mhf(t.mhf, point, n, md, prec if md == "float" else None, eps=e))
        w = prefactor_value(_prefactor(entry), point, e, mpmath.mp.dps)
        total += w * (mpmath.mpf(c.numerator) / c.denominator) * v
    return total


def _num(v):
    if isinstance(v, Mapping):
        return mpmath.mpc(mpmath.mpf(str(v["re"])), mpmath.mpf(str(v.get("im", 0))))
    return mpmath.mpf(str(v))


def _half_ulp(text: str):
    t = text.strip().lower().lstrip("+-")
    mant, _, exp = t.partition("e")
    dec = len(mant.split(".")[1]) if "." in mant else 0
    return mpmath.mpf(5) * mpmath.mpf(10) ** (-(dec + 1) + (int(exp) if exp else 0))


def printed_tolerance(ref) -> tuple:
    """Half a unit in the last printed digit, per real and imaginary part."""
    if isinstance(ref, Mapping):
        return (_half_ulp(str(ref["re"])), _half_ulp(str(ref.get("im", "0"))))
    return (_half_ulp(str(ref)), None)


def _judge(value, q: Mapping) -> tuple[bool, str]:
    kind = q.get("kind", "abs")
    if kind == "bound":
        tol = mpmath.mpf(str(q["tol"]))
        return bool(abs(value) < tol), str(q["tol"])
    ref = _num(q["ref"])
    diff = value - ref
    if kind == "printed":
        tr, ti = printed_tolerance(q["ref"])
        ok = abs(mpmath.re(diff)) <= tr and (ti is None or abs(mpmath.im(diff)) <= ti)
        ok = ok and (ti is not None or abs(mpmath.im(diff)) <= tr)
        return bool(ok), mpmath.nstr(tr, 2)
    tol = mpmath.mpf(str(q["tol"]))
    if kind == "rel":
        return bool(abs(diff) <= tol * abs(ref)), str(q["tol"])
    if kind == "abs":
        if isinstance(ref, mpmath.mpc) or isinstance(value, mpmath.mpc):
            ok = abs(mpmath.re(diff)) <= tol and abs(mpmath.im(diff)) <= tol
        else:
            ok = abs(diff) <= tol
        return bool(ok), str(q["tol"])
    raise SchemaError(f"unknown comparison kind {kind!r}")


def _fmt(v, digits: int = 22) -> str:
    if isinstance(v, mpmath.mpc) and v.imag != 0:
        return f"{mpmath.nstr(v.real, digits)}{'+' if v.imag >= 0 else '-'}{mpmath.nstr(abs(v.imag), digits)}i"
    return mpmath.nstr(mpmath.re(v) if isinstance(v, mpmath.mpc) else v, digits)


def _verbatim(ref) -> str:
    if isinstance(ref, Mapping):
        im = str(ref.get("im", "0"))
        return f"{ref['re']}{'' if im.startswith('-') else '+'}{im}i"
    return str(ref)


def _label(q: Mapping) -> str:
    what = q["what"]
    if what in ("coefficient", "weighted", "symbolic-zero"):
        return f"{what}[{q['order']}]"
    if "eps" in q:
        return f"{what}(eps={q['eps']})"
    return what


def run_case(case: CaseFixture | str) -> CaseReport:
    """Evaluate every check of a case."""
    if not isinstance(case, CaseFixture):
        case = load_case(case)
    report = CaseReport(case.name)
    t_case = time.perf_counter()
    max_order = max([int(c.get("order", case.order)) for c in case.checks] + [case.order])
    pairs = expand_sum(case.spec, max_order)
    for chk in case.checks:
        dps = int(chk.get("dps", _DPS))
        with mpmath.workdps(dps):
            cid = chk.get("id", "")
            K = int(chk.get("order", case.order))
            n = chk.get("trunc")
            mode, prec = chk.get("mode"), chk.get("prec")
            t0 = time.perf_counter()
            coeffs = None
            try:
                pt = _point(case.spec, chk["point"])
            except (SchemaError, ValueError, KeyError) as exc:
                report.results.append(CheckResult(case.name, cid, "point", "", "", "", "", False, n, 0.0, error=str(exc)))
                continue
            direct_cache: dict = {}
            for q in chk["quantities"]:
                what = q["what"]
                try:
                    if what == "symbolic-zero":
                        lead = symbolic_leading(pairs)
                        ok = lead is not None and lead[0] <= q["order"] and (lead[0] < q["order"] or not lead[1])
                        computed = "0 (exact)" if ok else "not symbolically zero"
                        report.results.append(CheckResult(case.name, cid, _label(q), computed, "0", "zero", "0", ok, n, time.perf_counter() - t0, q.get("cite", "")))
                        continue
                    if what in ("coefficient", "weighted", "series", "series-direct") and coeffs is None:
                        coeffs = {k: to_mpmath(v) for k, v in evaluate_sum(pairs, pt, n, K, mode, prec, dps).items()}
                    eps = _eps(q.get("eps")) if "eps" in q else None
                    if what == "coefficient":
                        value = coeffs.get(q["order"], mpmath.mpf(0))
                    elif what == "weighted":
                        value = coeffs.get(q["order"], mpmath.mpf(0)) * eps ** q["order"]
                    elif what == "series":
                        value = mpmath.fsum(c * eps**k for k, c in coeffs.items())
                    elif what in ("direct", "series-direct"):
                        key = (q["eps"], q.get("direct_trunc", n))
                        if key not in direct_cache:
                            direct_cache[key] = direct_value(case.spec, pt, q["eps"], q.get("direct_trunc", n), mode, prec)
                        value = direct_cache[key]
                        if what == "series-direct":
                            value = mpmath.fsum(c * eps**k for k, c in coeffs.items()) - value
                    else:
                        raise SchemaError(f"unknown quantity {what!r}")
                    ok, tol = _judge(value, q)
                    ref = "" if q.get("kind") == "bound" else _verbatim(q["ref"])
                    report.results.append(
                        CheckResult(
                            case.name, cid, _label(q), _fmt(value), ref, q.get("kind", "abs"), tol, ok, n, time.perf_counter() - t0, q.get("cite", ""),
                            expected_fail=q.get("expect") == "fail",
                        )
                    )
                except Exception as exc:  # a failing check is a report entry, not a crash
                    report.results.append(CheckResult(case.name, cid, _label(q), "", str(q.get("ref", "")), q.get("kind", ""), str(q.get("tol", "")), False, n, time.perf_counter() - t0, error=f"{type(exc).__name__}: {exc}"))
    report.seconds = time.perf_counter() - t_case
    return report


def _eps(v):
    e = parse_value(v)
    return mpmath.mpf(e.numerator) / e.denominator if isinstance(e, Fraction) else mpmath.mpmathify(e)


def run_verify(name: str | None = None) -> VerifyReport:
    """Run one shipped case, or all of them when ``name`` is ``None`` or ``"all"``.

    Raises:
        KeyError: for an unknown case name.
    """
    names = list_cases() if name in (None, "all") else [name]
    cases = [load_case(n) for n in names]
    return VerifyReport([run_case(c) for c in cases])
