import io
import json
from pathlib import Path

import jsonschema
import pytest

from poestar.cli import load, run
from poestar.syntax import ParseError, parse_term, parse_trs, print_trs

SCHEMA = json.loads((Path(__file__).resolve().parent.parent / "docs" / "report-schema.json").read_text())
FIXTURES = ["add", "exp", "fac", "gadget_k2"]


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_parse_add_fixture(add_file):
    trs = add_file.trs
    assert len(trs.signature) == 3 and len(trs.rules) == 2
    assert add_file.instance is not None
    assert add_file.instance.precedence.rank("add") > add_file.instance.precedence.rank("s")


def test_arity_error():
    text = "constructor Z 0\ndefined add 1 1\nrule add(Z) -> Z\n"
    with pytest.raises(ParseError) as info:
        parse_trs(text)
    assert info.value.line == 3


@pytest.mark.parametrize(
    "text,line",
    [
        ("constructor Z\n", 1),
        ("constructor Z 0\nconstructor Z 0\n", 2),
        ("constructor Z 0\nfoo bar\n", 2),
        ("constructor Z 0\ndefined f 0 1\nrule f(;Z) -> g(Z)\n", 3),
        ("constructor Z 0\ndefined f 0 1\nrule f(;Z) -> Z -> Z\n", 3),
        ("constructor Z 0\ndefined f 0 1\nrule f(Z) -> Z\n", 3),
        ("constructor Z 0\nprecedence Z > q\n", 2),
        ("constructor Z 0\ndefined f 0 1\nprecedence f > Z\nprecedence Z > f\n", 3),
        ("constructor Z 0\ndefined f 0 1\nrule f(;Z) -> Z$\n", 3),
    ],
)
def test_parse_errors_carry_lines(text, line):
    with pytest.raises(ParseError) as info:
        parse_trs(text)
    assert info.value.line == line


def test_parse_error_column():
    text = "constructor Z 0\ndefined f 0 1\nrule f(;Z) -> Z$\n"
    with pytest.raises(ParseError) as info:
        parse_trs(text)
    assert info.value.column == text.splitlines()[2].index("$") + 1


def test_comments_and_blank_lines():
    text = "# header\n\nconstructor Z 0   # zero\ndefined f 0 1\nrule f(;x) -> x # id\n"
    assert len(parse_trs(text).trs.rules) == 1


def test_normalised_terms_only_on_request(add_file):
    with pytest.raises(ParseError):
        parse_term("add^n(Z)", add_file.trs)
    t = parse_term("add^n(s(Z))", add_file.trs, normalized=True)
    assert t.symbol.normalized and t.symbol.arity == 1


def test_constructor_leading_semicolon(add_file):
    assert parse_term("s(;Z)", add_file.trs) == parse_term("s(Z)", add_file.trs)


@pytest.mark.parametrize("name", FIXTURES)
def test_round_trip(name):
    tf = load(name)
    again = parse_trs(print_trs(tf.trs, tf.precedence_chains))
    assert again.trs == tf.trs
    assert again.instance == tf.instance


def test_load_by_path_and_name(tmp_path):
    path = tmp_path / "mine.trs"
    path.write_text("constructor Z 0\ndefined f 0 1\nrule f(;x) -> x\n")
    assert len(load(str(path)).trs.rules) == 1
    assert load("exp.trs").trs == load("exp").trs


def test_cli_check_add():
    code, out, _ = cli("check", "add")
    assert code == 0 and out.strip().endswith("COMPATIBLE")


def test_cli_check_fac_fails():
    code, out, _ = cli("check", "fac")
    assert code == 1 and "INCOMPATIBLE" in out


def test_cli_infer_fac():
    code, out, _ = cli("infer", "fac")
    assert code == 1 and "INCOMPATIBLE (exhaustive)" in out


def test_cli_infer_add():
    code, out, _ = cli("infer", "add")
    assert code == 0 and "add:ns" in out


def test_cli_rewrite_and_trace():
    code, out, _ = cli("rewrite", "exp", "exp(s(s(Z));Z)")
    assert code == 0 and out.split() == ["s(s(s(s(Z))))", "steps:", "7"]
    code, out, _ = cli("--json", "trace", "add", "add(s(Z);Z)")
    report = json.loads(out)
    assert code == 0 and report["length"] == 2
    assert [s["rule"] for s in report["steps"]] == [2, 1]
    assert report["steps"][1]["position"] == [0]


def test_cli_budget_exit_code():
    code, _, err = cli("rewrite", "exp", "exp(s(s(s(Z)));Z)", "--budget", "3")
    assert code == 3 and "within 3 steps" in err


def test_cli_rc_exp():
    code, out, _ = cli("--json", "rc", "exp", "--max-size", "10")
    report = json.loads(out)
    steps = [row["max_steps"] for row in report["table"]]
    assert code == 0 and steps == sorted(steps)
    assert report["log2_slope"] == pytest.approx(1.0, abs=0.1)


def test_cli_embed():
    code, out, _ = cli("embed", "exp", "exp(s(s(Z));Z)")
    assert code == 0 and out.strip().endswith("EMBEDDED")
    code, _, err = cli("embed", "add", "add(add(Z;Z);Z)")
    assert code == 2 and "non-value" in err


def test_cli_slow():
    code, out, _ = cli("--json", "slow", "add", "--term", "add^n(s(Z))", "--ell", "2")
    report = json.loads(out)
    assert code == 0 and report["slow"] == 7 and report["bound"]["holds"]


def test_cli_guard_exit_code():
    code, _, _ = cli("slow", "add", "--term", "add^n(s(s(s(s(s(s(Z)))))))", "--ell", "2")
    assert code == 3


@pytest.mark.parametrize(
    "argv",
    [
        ("check", "no-such-file"),
        ("rewrite", "add", "add(x;Z)"),
        ("rewrite", "add", "add(Z)"),
        ("frobnicate",),
        ("rc", "add"),
    ],
)
def test_cli_usage_errors(argv):
    code, _, _ = cli(*argv)
    assert code == 2


def test_seed_is_accepted_and_ignored():
    assert cli("--seed", "5", "check", "add")[1] == cli("check", "add")[1]
    assert cli("check", "add", "--seed", "9", "--json")[1] == cli("--json", "check", "add")[1]


REPORTS = [
    ("check", "add"),
    ("check", "fac"),
    ("infer", "exp"),
    ("infer", "fac"),
    ("rewrite", "add", "add(s(Z);s(Z))"),
    ("rewrite", "exp", "exp(s(s(s(Z)));Z)", "--budget", "2"),
    ("trace", "exp", "exp(s(Z);Z)"),
    ("rc", "add", "--max-size", "6"),
    ("embed", "exp", "exp(s(Z);Z)", "--certificates"),
    ("embed", "add", "add(add(Z;Z);Z)"),
    ("slow", "exp", "--term", "exp^n(s(Z))", "--ell", "2"),
]


@pytest.mark.parametrize("argv", REPORTS, ids=lambda a: "-".join(a[:2]))
def test_json_reports_match_schema(argv):
    code, out, _ = cli("--json", *argv)
    report = json.loads(out)
    jsonschema.validate(report, SCHEMA, cls=jsonschema.Draft202012Validator)
    assert report["exit_code"] == code
    assert out == cli("--json", *argv)[1]


def test_schema_is_valid():
    jsonschema.Draft202012Validator.check_schema(SCHEMA)
