"""Command-line front end, input schema and shipped worked examples."""

from __future__ import annotations

from .fixtures import CaseFixture, CaseReport, CheckResult, VerifyReport, list_cases, load_case, run_case, run_verify
from .main import main
from .schema import MHFSum, SumEntry, as_sum, load_document, parse_spec, spec_to_dict

__all__ = [
    "CaseFixture",
    "CaseReport",
    "CheckResult",
    "MHFSum",
    "SumEntry",
    "VerifyReport",
    "as_sum",
    "list_cases",
    "load_case",
    "load_document",
    "main",
    "parse_spec",
    "run_case",
    "run_verify",
    "spec_to_dict",
]
