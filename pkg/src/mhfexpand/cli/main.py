"""``mhfexpand`` command line.

Exit codes: 0 success, 1 verification failure, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Sequence

import mpmath

from ..errors import MHFError
from ..laurent import annihilator_residual, build_annihilator, classify_singular, laurent_expand_terms
from ..mhf import MHF, format_term
from ..numeval.core import EvalPoint, parse_value
from ..numeval.oracle import fd_oracle
from ..numeval.prefactor import PrefactorSpec
from ..scalar import format_rational
from .fixtures import _DPS, direct_value, evaluate_sum, expand_sum, list_cases, run_verify
from .schema import MHFSum, as_sum, parse_spec

__all__ = ["main", "build_parser", "format_number"]


class UsageError(Exception):
    """Bad command-line input; exit code 2."""


def format_number(v, dps: int | None = None):
    """JSON-safe value at full precision: a string, or ``{"re", "im"}``."""
    if isinstance(v, Fraction):
        return format_rational(v)
    v = mpmath.mpmathify(v) if not isinstance(v, (mpmath.mpf, mpmath.mpc)) else v
    d = dps or mpmath.mp.dps
    if isinstance(v, mpmath.mpc):
        return {"re": mpmath.nstr(v.real, d, min_fixed=-4, max_fixed=d), "im": mpmath.nstr(v.imag, d, min_fixed=-4, max_fixed=d)}
    return mpmath.nstr(v, d, min_fixed=-4, max_fixed=d)


def _text(v) -> str:
    f = format_number(v)
    if isinstance(f, dict):
        sign = "-" if f["im"].startswith("-") else "+"
        return f"{f['re']} {sign} {f['im'].lstrip('-')}i"
    return f


def _parse_point(items: Sequence[str] | None) -> dict[str, object]:
    out = {}
    for it in items or ():
        name, sep, val = it.partition("=")
        if not sep or not name:
            raise UsageError(f"point entry {it!r} is not of the form name=value")
        try:
            out[name.strip()] = parse_value(val.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"bad value for {name}: {exc}") from exc
    return out


def _point(spec: MHFSum, items) -> EvalPoint:
    raw = _parse_point(items)
    missing = [v for v in spec.variables if v not in raw]
    if missing:
        raise UsageError(f"--point lacks {', '.join(missing)}")
    return EvalPoint(spec.resolve_point(raw))


def _emit(args, payload: dict, text: str) -> None:
    if getattr(args, "format", "text") == "json":
        print(json.dumps(payload, indent=2))
    else:
        print(text)


# commands -------------------------------------------------------------------


def _cmd_classify(args) -> int:
    spec = as_sum(parse_spec(args.file))
    rows = []
    for i, e in enumerate(spec.entries):
        c = classify_singular(e.term.mhf)
        rows.append({"entry": i, "kind": c.kind, "singular": [str(f.param) for _, f in c.singular], "text": str(c)})
    _emit(args, {"entries": rows}, "\n".join(f"[{r['entry']}] {r['text']}" for r in rows))
    return 0


def _cmd_expand(args) -> int:
    spec = as_sum(parse_spec(args.file))
    pairs = expand_sum(spec, args.order)
    out, lines = [], []
    for i, (pre, exp) in enumerate(pairs):
        item = {"expansion": exp.to_dict()}
        if pre != PrefactorSpec():
            item["prefactor"] = str(pre)
            lines.append(f"[{i}] prefactor {pre}")
        elif len(pairs) > 1:
            lines.append(f"[{i}]")
        for k in sorted(exp.orders):
            lines.append(f"eps^{k}:")
            lines.extend(f"  {format_term(t)}" for t in exp.orders[k])
        if not exp.orders:
            lines.append("0")
        out.append(item)
    _emit(args, {"order": args.order, "entries": out}, "\n".join(lines))
    return 0


def _cmd_eval(args) -> int:
    spec = as_sum(parse_spec(args.file))
    with mpmath.workdps(args.dps):
        pt = _point(spec, args.point)
        pairs = expand_sum(spec, args.order)
        coeffs = evaluate_sum(pairs, pt, args.trunc, args.order, args.mode, args.prec, args.dps)
        payload = {"trunc": args.trunc, "mode": args.mode or pt.mode, "coefficients": {str(k): format_number(v) for k, v in sorted(coeffs.items())}}
        lines = [f"eps^{k}: {_text(v)}" for k, v in sorted(coeffs.items())]
        if args.eps is not None:
            e = parse_value(args.eps)
            ev = mpmath.mpf(e.numerator) / e.denominator if isinstance(e, Fraction) else mpmath.mpmathify(e)
            series = mpmath.fsum(mpmath.mpmathify(c) * ev**k for k, c in coeffs.items())
            direct = direct_value(spec, pt, args.eps, args.direct_trunc or args.trunc, args.mode, args.prec)
            payload.update({"eps": args.eps, "series": format_number(series), "direct": format_number(direct)})
            lines += [f"series(eps={args.eps}): {_text(series)}", f"direct(eps={args.eps}): {_text(direct)}"]
    _emit(args, payload, "\n".join(lines))
    return 0


def _parse_stencil(text: str) -> tuple[Fraction, int]:
    h, _, size = text.partition(",")
    try:
        hv = parse_value(h.strip())
        if not isinstance(hv, Fraction) or hv <= 0:
            raise ValueError("step must be a positive rational")
        return hv, int(size) if size else 6
    except ValueError as exc:
        raise UsageError(f"--eps-stencil: {exc}") from exc


def _cmd_oracle(args) -> int:
    spec = as_sum(parse_spec(args.file))
    if any(e.prefactor is not None for e in spec.entries):
        raise UsageError("oracle works on MHFs and eps-weighted sums without Gamma prefactors")
    h, size = _parse_stencil(args.eps_stencil)
    with mpmath.workdps(args.dps):
        pt = _point(spec, args.point)
        total: dict[int, object] = {}
        for e in spec.entries:
            for k, v in fd_oracle(e.term, pt, args.trunc, args.order, args.pole_depth, h=h, size=size, prec=args.prec or 256).items():
                total[k] = total.get(k, 0) + v
        payload = {"stencil": {"h": format_rational(h), "pairs": size}, "coefficients": {str(k): format_number(v) for k, v in sorted(total.items())}}
        _emit(args, payload, "\n".join(f"eps^{k}: {_text(v)}" for k, v in sorted(total.items())))
    return 0


def _cmd_annihilate(args) -> int:
    m = parse_spec(args.file)
    if not isinstance(m, MHF):
        raise UsageError("annihilate needs a single MHF document")
    var = int(args.var) if args.var.isdigit() else args.var
    try:
        L = build_annihilator(m, var)
    except (KeyError, IndexError, ValueError) as exc:
        raise UsageError(f"--var {args.var}: {exc}") from exc
    payload = {"variable": L.variables[L.index], "operator": str(L)}
    lines = [f"L_{L.variables[L.index]} = {L}"]
    code = 0
    if args.check:
        if not args.point:
            raise UsageError("--check needs --point")
        raw = _parse_point(args.point)
        residual = annihilator_residual(m, var, raw, args.trunc, parse_value(args.eps), args.dps)
        ok = abs(residual) < args.tol
        payload.update({"residual": format_number(residual, 17), "tol": args.tol, "passed": bool(ok)})
        lines.append(f"residual at N={args.trunc}: {_text(residual)} ({'PASS' if ok else 'FAIL'}, tol {args.tol})")
        code = 0 if ok else 1
    _emit(args, payload, "\n".join(lines))
    return code


def _cmd_verify(args) -> int:
    if args.list:
        names = list_cases()
        _emit(args, {"cases": names}, "\n".join(names))
        return 0
    if args.case not in (None, "all") and args.case not in list_cases():
        raise UsageError(f"unknown case {args.case!r}; known: {', '.join(list_cases())}")
    report = run_verify(args.case)
    _emit(args, report.to_dict(), report.format_text())
    return 0 if report.passed else 1


# parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mhfexpand", description="Epsilon expansion and numeric evaluation of multivariable hypergeometric series.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_, file=True):
        s = sub.add_parser(name, help=help_, description=help_)
        if file:
            s.add_argument("file", help="JSON document (MHF, pFq shorthand or weighted sum)")
        s.add_argument("--format", choices=("text", "json"), default="text", help="output format (default: text)")
        return s

    def numeric(s, trunc_default=None):
        s.add_argument("--point", nargs="+", metavar="NAME=VALUE", help="values: 1/10, 0.1 (exact decimal), f64:0.1 (nearest double), 1-2j")
        s.add_argument("--trunc", type=int, default=trunc_default, help="per-index upper summation limit N")
        s.add_argument("--prec", type=int, default=None, help="float mode precision in bits (default: extended double)")
        s.add_argument("--dps", type=int, default=_DPS, help=f"decimal digits for prefactors and output (default: {_DPS})")

    add("classify", "report whether each input series is Taylor type or possibly Laurent")

    s = add("expand", "symbolic eps expansion as sums of MHFs")
    s.add_argument("--order", "-K", type=int, required=True, help="highest eps power")

    s = add("eval", "numeric eps coefficients at a point")
    numeric(s, 60)
    s.add_argument("--mode", choices=("exact", "float", "complex"), default=None, help="arithmetic (default: exact for rational points)")
    s.add_argument("--order", "-K", type=int, default=2, help="highest eps power (default: 2)")
    s.add_argument("--eps", default=None, help="also sum the series and evaluate the input directly at this eps")
    s.add_argument("--direct-trunc", type=int, default=None, help="truncation for the direct evaluation (default: --trunc)")

    s = add("oracle", "eps coefficients by finite differences in eps (cross-check)")
    numeric(s, 60)
    s.add_argument("--eps-stencil", default="1/1000,6", metavar="H[,PAIRS]", help="stencil ±H*2^-j, j < PAIRS (default: 1/1000,6)")
    s.add_argument("--order", "-K", type=int, default=2, help="highest eps power (default: 2)")
    s.add_argument("--pole-depth", type=int, default=0, help="fit eps^D * F to recover poles down to eps^-D")

    s = add("annihilate", "build the annihilator for one variable and optionally check it numerically")
    numeric(s, 60)
    s.add_argument("--var", required=True, help="variable name or 0-based index")
    s.add_argument("--check", action="store_true", help="evaluate the truncated residual at --point")
    s.add_argument("--eps", default="0", help="eps value for the check (default: 0)")
    s.add_argument("--tol", type=float, default=1e-8, help="residual tolerance (default: 1e-8)")

    s = add("verify", "run shipped worked examples against their reference values", file=False)
    s.add_argument("case", nargs="?", default=None, help="case name or 'all' (default: all)")
    s.add_argument("--list", action="store_true", help="list shipped cases")
    return p


_COMMANDS = {
    "classify": _cmd_classify,
    "expand": _cmd_expand,
    "eval": _cmd_eval,
    "oracle": _cmd_oracle,
    "annihilate": _cmd_annihilate,
    "verify": _cmd_verify,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (UsageError, MHFError, FileNotFoundError, ValueError) as exc:
        print(f"mhfexpand {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
