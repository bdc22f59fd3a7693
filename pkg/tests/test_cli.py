from __future__ import annotations

import json
import os

import pytest

from banachforge.cli import main, parse_vector
from banachforge.core import Coeffs, ParseError


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out.strip(), err


# norm


@pytest.mark.parametrize("space, vector, want", [
    ("jp:2", "1,1", "2"),
    ("jp:2", "1", "1"),
    ("jp:1", "1,-2,3,-1", "7"),
    ("tsirelson(schreier,1/2)", "0,1,1,1,1", "3/2"),
    ("tsirelson(schreier,1/2)", "0,1,1", "1"),
    ("lp:1", '{"3": "1/2", "5": "-1"}', "3/2"),
])
def test_norm(capsys, space, vector, want):
    code, out, _ = run(capsys, "norm", "--space", space, "--vector", vector)
    assert (code, out) == (0, want)


def test_norm_float_mode(capsys):
    code, out, _ = run(capsys, "--mode", "float", "norm", "--space", "lp:2", "--vector", "3,4")
    assert code == 0 and float(out) == pytest.approx(5.0, abs=1e-12)


def test_norm_vector_file(capsys, tmp_path):
    f = tmp_path / "v.json"
    f.write_text('{"1": 1, "2": 1}')
    code, out, _ = run(capsys, "norm", "--space", "jp:2", "--vector", f"@{f}")
    assert (code, out) == (0, "2")


@pytest.mark.parametrize("space, vector", [("nope", "1"), ("jp:2", "1,x"), ("lp:2", "{bad")])
def test_norm_parse_errors(capsys, space, vector):
    code, _, err = run(capsys, "norm", "--space", space, "--vector", vector)
    assert code == 2 and err.startswith("banachforge:")


def test_norm_cap_exceeded(capsys):
    code, _, err = run(capsys, "norm", "--space", "tsirelson(schreier,1/2)", "--vector", "1," * 40 + "1")
    assert code == 3 and "cap" in err


def test_parse_vector_forms():
    assert parse_vector("1,1/2,0") == Coeffs({1: 1, 2: "1/2"})
    assert parse_vector('{"3": "1/2"}') == Coeffs({3: "1/2"})
    assert parse_vector("") == Coeffs({})
    with pytest.raises(ParseError):
        parse_vector('{"3": }')


# family


@pytest.mark.parametrize("argv, code, out", [
    (["member", "--spec", "schreier", "--set", "2,3"], 0, "true"),
    (["member", "--spec", "schreier", "--set", "1,2"], 1, "false"),
    (["admissible", "--spec", "schreier", "--sets", "2,3;4"], 0, "true"),
    (["admissible", "--spec", "schreier", "--sets", "1;2,3"], 1, "false"),
    (["regular", "--spec", "schreier", "--cap", "8"], 0, "true"),
])
def test_family(capsys, argv, code, out):
    assert run(capsys, "family", *argv)[:2] == (code, out)


def test_family_errors(capsys):
    assert run(capsys, "family", "member", "--spec", "nonsense", "--set", "1")[0] == 2
    assert run(capsys, "family", "member", "--spec", "schreier", "--set", "1,x")[0] == 2


# bd


@pytest.fixture
def model_file(tmp_path, capsys):
    reqs = tmp_path / "reqs.json"
    reqs.write_text(json.dumps([
        {"kind": "Even0", "rank": 2, "j": 1, "b": {"pool": "B", "coeffs": {"0": "1/2"}}},
        {"kind": "Even1", "rank": 4, "j": 1, "xi": 1, "b": {"pool": "K", "k": 3, "g": {"1": "1"}}},
    ]))
    out = tmp_path / "model.json"
    assert main(["bd", "build", "--requests", str(reqs), "--out", str(out)]) == 0
    capsys.readouterr()
    return out


def test_bd_build_to_stdout(capsys):
    code, out, _ = run(capsys, "bd", "build")
    model = json.loads(out)
    assert code == 0 and [d["kind"] for d in model["delta"]] == ["Base"]


def test_bd_analysis(capsys, model_file):
    code, out, _ = run(capsys, "bd", "analysis", "--model", str(model_file), "--node", "2")
    chain = json.loads(out)
    assert code == 0
    assert [(c["p"], c["xi"]) for c in chain] == [(2, 1), (4, 2)]
    assert chain[1]["b"] == {"pool": "K", "k": 3, "g": {"1": "1"}}


def test_bd_eval_and_norm(capsys, model_file, tmp_path):
    vec = tmp_path / "u.json"
    vec.write_text(json.dumps({"stage": 3, "x": {"3": {"1": "2"}}, "y": {"1": "5"}}))
    code, out, _ = run(capsys, "bd", "eval", "--model", str(model_file), "--node", "2", "--vector", str(vec))
    assert (code, out) == (0, "41/8")
    code, out, _ = run(capsys, "bd", "norm", "--model", str(model_file), "--vector", str(vec))
    assert (code, out) == (0, "41/8")


def test_bd_schema_violations(capsys, tmp_path):
    reqs = tmp_path / "bad.json"
    reqs.write_text(json.dumps([{"kind": "Odd1", "rank": 2, "j": 1, "xi": 0, "eta": 0}]))
    code, _, err = run(capsys, "bd", "build", "--requests", str(reqs))
    assert code == 2 and "schema violation" in err
    reqs.write_text("{}")
    assert run(capsys, "bd", "build", "--requests", str(reqs))[0] == 2
    reqs.write_text("not json")
    assert run(capsys, "bd", "build", "--requests", str(reqs))[0] == 2
    assert run(capsys, "bd", "analysis", "--model", str(tmp_path / "missing.json"), "--node", "1")[0] == 2


# verify


def test_verify_pass_and_report(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, text, err = run(capsys, "verify", "utc-column", "--trials", "20", "--seed", "7", "--out", str(out))
    report = json.loads(text)
    assert code == 0 and report["pass"] and report["suite"] == "utc-column"
    assert json.loads(out.read_text()) == report
    assert "PASS" in err


def test_verify_is_deterministic(capsys):
    a = run(capsys, "verify", "submult-2", "--trials", "30", "--seed", "5")[1]
    b = run(capsys, "verify", "submult-2", "--trials", "30", "--seed", "5")[1]
    assert a == b


def test_verify_unknown_suite(capsys):
    assert run(capsys, "verify", "nope")[0] == 2


def test_verify_toy_flag(capsys):
    code, text, _ = run(capsys, "verify", "ris-average", "--mode", "toy", "--trials", "2")
    report = json.loads(text)
    assert code == 0 and report["toy"] is True and "label" in report


def test_verify_compliant_rejects_toy_suite(capsys):
    assert run(capsys, "verify", "ris-average", "--mode", "compliant")[0] == 2


def test_verify_float_mode_restores_env(capsys):
    code, text, _ = run(capsys, "verify", "utc-column", "--trials", "5", "--mode", "float")
    assert code == 0 and json.loads(text)["mode"] == "float"
    assert "BANACHFORGE_MODE" not in os.environ
