from __future__ import annotations

import json
from fractions import Fraction

import pytest

from mhfexpand.cli import main
from mhfexpand.cli.fixtures import CheckResult, list_cases, load_case, run_case
from mhfexpand.cli.schema import MHFSum, parse_spec, spec_to_dict
from mhfexpand.errors import SchemaError
from mhfexpand.mhf import MHF

GAUSS = {"pFq": {"upper": ["eps", "-eps"], "lower": ["eps+1"], "variable": "x"}}
F1 = {
    "variables": ["x", "y"],
    "numerator": [{"param": "3/2", "form": [1, 1]}, {"param": "2eps+1", "form": [1, 0]}, {"param": "4-eps", "form": [0, 1]}],
    "denominator": [{"param": "eps-2", "form": [1, 1]}],
}


@pytest.fixture
def doc(tmp_path):
    def write(d, name="in.json"):
        p = tmp_path / name
        p.write_text(json.dumps(d))
        return str(p)

    return write


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# schema ---------------------------------------------------------------------


def test_parse_mhf_and_round_trip():
    m = parse_spec(F1)
    assert isinstance(m, MHF) and m.variables == ("x", "y")
    assert parse_spec(spec_to_dict(m)) == m


def test_parse_pfq():
    m = parse_spec({"pFq": {"upper": ["3", "2"], "lower": ["eps-3/2"], "variable": "x"}})
    assert [str(f.param) for f in m.numerator] == ["3", "2"] or len(m.numerator) == 2
    assert m.denominator[0].param.b1 == 1 and m.denominator[0].param.b0 == Fraction(-3, 2)


def test_parse_sum_round_trip():
    d = {
        "sum": [
            {"mhf": GAUSS, "prefactor": {"constant": "2", "powers": [{"base": "x", "exponent": "-eps"}], "gammas": [{"arg": "eps", "power": 1}]}},
            {"mhf": GAUSS, "eps_power": 1, "coefficient": "-1/3"},
        ]
    }
    s = parse_spec(d)
    assert isinstance(s, MHFSum) and len(s.entries) == 2
    assert parse_spec(spec_to_dict(s)) == s


def test_constant_mhf():
    m = parse_spec({"variables": [], "numerator": [], "denominator": []})
    assert m.variables == ()


@pytest.mark.parametrize(
    "d,loc",
    [
        ({"variables": ["x"], "numerator": [{"param": "eps", "form": [1, 1]}], "denominator": []}, "$.numerator[0].form"),
        ({"variables": ["x"], "numerator": [{"param": "eps+", "form": [1]}], "denominator": []}, "$.numerator[0].param"),
        ({"variables": ["x"], "numerator": [], "denominator": [], "colour": 1}, "$"),
        ({"sum": [{"mhf": GAUSS, "prefactor": {"gammas": [{"arg": "eps", "power": 2}]}}]}, "$.sum[0].prefactor"),
    ],
)
def test_schema_error_locations(d, loc):
    with pytest.raises(SchemaError) as exc:
        parse_spec(d)
    assert exc.value.location.startswith(loc)


def test_sunset_fixture_parses():
    case = load_case("sunset")
    assert len(case.spec.entries) == 4


# commands -------------------------------------------------------------------


def test_classify(capsys, doc):
    code, out, _ = run(capsys, "classify", doc(F1), "--format", "json")
    assert code == 0
    assert json.loads(out)["entries"][0]["kind"] == "PossiblyLaurent"


def test_expand_text_and_json(capsys, doc):
    code, out, _ = run(capsys, "expand", doc(GAUSS), "-K", "2")
    assert code == 0 and "eps^0:" in out and "eps^2:" in out
    code, out, _ = run(capsys, "expand", doc(GAUSS), "-K", "2", "--format", "json")
    assert json.loads(out)["order"] == 2


def test_eval_exact(capsys, doc):
    code, out, _ = run(capsys, "eval", doc(GAUSS), "--point", "x=1/10", "--trunc", "30", "--format", "json")
    assert code == 0
    c = json.loads(out)["coefficients"]
    assert float(c["0"]) == 1 and float(c["1"]) == 0
    assert abs(float(c["2"]) + 0.1026177910993911) < 1e-15


def test_eval_direct(capsys, doc):
    code, out, _ = run(capsys, "eval", doc(GAUSS), "--point", "x=f64:0.1", "--mode", "float", "--prec", "128", "--eps", "1e-3", "-K", "3")
    assert code == 0 and "series(eps=1e-3)" in out and "direct(eps=1e-3)" in out


def test_oracle(capsys, doc):
    code, out, _ = run(capsys, "oracle", doc(GAUSS), "--point", "x=1/10", "--format", "json")
    assert code == 0
    assert abs(float(json.loads(out)["coefficients"]["2"]) + 0.1026177910993911) < 1e-10


def test_annihilate_pass_and_fail(capsys, doc):
    g = doc({"pFq": {"upper": ["1/3", "2/5"], "lower": ["8/7"], "variable": "x"}})
    code, out, _ = run(capsys, "annihilate", g, "--var", "x", "--check", "--point", "x=1/4", "--format", "json")
    assert code == 0 and json.loads(out)["passed"]
    code, _, _ = run(capsys, "annihilate", g, "--var", "x", "--check", "--point", "x=1/4", "--trunc", "3", "--tol", "1e-30")
    assert code == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["eval", "{f}", "--point", "y=1/10"],
        ["eval", "{f}", "--point", "x"],
        ["annihilate", "{f}", "--var", "z"],
        ["annihilate", "{f}", "--var", "x", "--check"],
        ["oracle", "{f}", "--point", "x=1/10", "--eps-stencil", "-1"],
        ["classify", "/nonexistent/file.json"],
        ["verify", "no-such-case"],
    ],
)
def test_input_errors_exit_2(capsys, doc, argv):
    f = doc(GAUSS)
    code, _, err = run(capsys, *[a.format(f=f) for a in argv])
    assert code == 2 and err.startswith("mhfexpand")


def test_bad_schema_exit_2(capsys, doc):
    code, _, err = run(capsys, "classify", doc({"variables": ["x"], "numerator": 3, "denominator": []}))
    assert code == 2 and "$.numerator" in err


def test_verify_list(capsys):
    code, out, _ = run(capsys, "verify", "--list")
    assert code == 0 and out.split() == list_cases()
    assert len(list_cases()) == 10


def test_verify_one_case(capsys):
    code, out, _ = run(capsys, "verify", "gauss-integer")
    assert code == 0 and "all passed" in out


# fixtures -------------------------------------------------------------------


@pytest.mark.parametrize("name", list_cases())
def test_every_reference_is_cited(name):
    case = load_case(name)
    assert case.citation
    for chk in case.checks:
        for q in chk["quantities"]:
            assert q.get("cite"), (name, chk.get("id"), q)


def test_expected_fail_semantics():
    base = dict(case="c", check="k", quantity="q", computed="1", reference="2", kind="abs", tol="0", trunc=1, seconds=0.0)
    assert CheckResult(matched=True, **base).passed
    assert not CheckResult(matched=False, **base).passed
    assert CheckResult(matched=False, expected_fail=True, **base).passed
    assert not CheckResult(matched=True, expected_fail=True, **base).passed
    assert not CheckResult(matched=False, expected_fail=True, error="boom", **base).passed


def test_run_case_reports_mismatch(tmp_path):
    d = {
        "name": "tmp",
        "input": GAUSS,
        "order": 2,
        "checks": [
            {
                "id": "x=1/10",
                "point": {"x": "1/10"},
                "trunc": 30,
                "quantities": [
                    {"what": "coefficient", "order": 0, "ref": "1", "kind": "abs", "tol": 1e-20, "cite": "t"},
                    {"what": "coefficient", "order": 2, "ref": "-0.2", "kind": "abs", "tol": 1e-3, "cite": "t"},
                    {"what": "coefficient", "order": 2, "ref": "-0.2", "kind": "abs", "tol": 1e-3, "cite": "t", "expect": "fail"},
                ],
            }
        ],
    }
    p = tmp_path / "tmp.json"
    p.write_text(json.dumps(d))
    rep = run_case(str(p))
    assert [r.passed for r in rep.results] == [True, False, True]
    assert not rep.passed


def test_verify_reproducible_exact():
    a, b = run_case("gauss-half-integer"), run_case("gauss-half-integer")
    assert [(r.quantity, r.computed, r.passed) for r in a.results] == [(r.quantity, r.computed, r.passed) for r in b.results]
