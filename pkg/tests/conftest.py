from __future__ import annotations

from fractions import Fraction

import mpmath
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _mp_precision():
    """Every test starts from mpmath's default precision."""
    with mpmath.workdps(15):
        yield


def mpq(q: Fraction):
    return mpmath.mpf(q.numerator) / q.denominator


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Record and print one pass/fail line for an acceptance criterion."""

    def record(label: str, ok: bool, detail: str = "", expected_fail: bool = False) -> bool:
        status = ("XFAIL" if not ok else "XPASS") if expected_fail else ("PASS" if ok else "FAIL")
        line = f"criterion {label}: {status} {detail}".rstrip()
        print(line)
        request.config._acceptance_lines.append(line)
        return ok

    return record
