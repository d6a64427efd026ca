import io
import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from pebc.cli import run

from conftest import GEAR, P2P

SCHEMA = json.loads(resources.files("pebc").joinpath("schemas/cli_output.schema.json").read_text())


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def call_json(*argv):
    code, out, _ = call(*argv, "--json")
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMA)
    return code, doc


def test_schema_is_valid():
    jsonschema.Draft202012Validator.check_schema(SCHEMA)


def test_check_ok():
    code, out, _ = call("check", GEAR)
    assert code == 0 and "GEAR: ok" in out
    code, doc = call_json("check", GEAR)
    assert code == 0 and doc["result"]["properties"] == ["door_open", "gear_retracted"]


def test_check_reports_diagnostics(tmp_path):
    bad = tmp_path / "bad.peb"
    bad.write_text(
        "MACHINE M VARIABLES x INVARIANTS x : Nat INITIALISATION x := 0 "
        "EVENTS EVENT e THEN x := {1@0.5, 2@0.6} END END"
    )
    code, _, err = call("check", bad)
    assert code == 1 and "11/10" in err and "bad.peb:1:" in err
    code, doc = call_json("check", bad)
    assert code == 1 and doc["exit_code"] == 1 and "11/10" in doc["diagnostics"][0]["message"]


def test_syntax_error_exit_code(tmp_path):
    bad = tmp_path / "bad.peb"
    bad.write_text("MACHINE")
    assert call("check", bad)[0] == 1


def test_missing_file_is_usage_error():
    code, _, err = call("simulate", "missing.peb")
    assert code == 2 and "no such file" in err
    code, doc = call_json("simulate", "missing.peb")
    assert code == 2 and doc["error"]["kind"] == "UsageError"


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["smc", str(GEAR)], ["simulate", str(GEAR), "--max-steps", "0"]])
def test_usage_errors(argv):
    assert call(*argv)[0] == 2


def test_usage_error_as_json():
    code, doc = call_json("smc", GEAR)
    assert code == 2 and doc["command"] == "smc"


def test_simulate_summary_and_trace(tmp_path):
    code, doc = call_json("simulate", GEAR, "--seed", 4)
    res = doc["result"]
    assert code == 0 and res["termination"] == "deadlock" and res["final_state"]["door"] == "closed"
    path = tmp_path / "t.jsonl"
    code, out, _ = call("simulate", GEAR, "--seed", 4, "--trace", path)
    rows = [json.loads(l) for l in path.read_text().splitlines()]
    assert len(rows) == res["steps"] + 1 and rows[-1]["state"] == res["final_state"]
    assert f"deadlock after {res['steps']} steps" in out


def test_simulate_trace_to_stdout():
    code, out, _ = call("simulate", GEAR, "--seed", 1, "--max-steps", 3, "--trace")
    lines = out.splitlines()
    assert code == 0 and [json.loads(l)["step"] for l in lines[:4]] == [0, 1, 2, 3]


def test_smc_prints_estimate_json():
    code, out, _ = call("smc", GEAR, "--query", "door_open", "--no-timing")
    est = json.loads(out)
    assert code == 0 and est["mean"] == 0.0 and est["half_width"] == 0.0 and est["wall_time"] == 0.0
    code, doc = call_json("smc", GEAR, "--query", "door = open", "--no-timing")
    assert doc["result"] == est | {"query": doc["result"]["query"]}


def test_smc_outputs_are_reproducible(tmp_path):
    argv = ["smc", GEAR, "--query", "gear = retracted", "--max-runs", 200, "--batch", 100, "--no-timing"]
    a = call(*argv, "--samples", tmp_path / "a.csv")
    b = call(*argv, "--jobs", 2, "--samples", tmp_path / "b.csv")
    assert a == b
    assert (tmp_path / "a.csv").read_text() == (tmp_path / "b.csv").read_text()


def test_exact():
    code, out, _ = call("exact", GEAR, "--query", "gear_retracted")
    assert code == 0 and "14826074143/29355316036" in out and "0.505056" in out
    code, doc = call_json("exact", P2P, "--const", "N=2", "--const", "K=2", "--query", "transmissions")
    assert doc["result"]["value"] == "197/30" and doc["result"]["decimal"] == "6.566667"


def test_exact_reach_and_horizon():
    code, doc = call_json("exact", GEAR, "--query", "door = open", "--reach", 2)
    assert doc["result"]["value"] == "1/4"
    code, doc = call_json("exact", P2P, "--const", "N=1", "--const", "K=1", "--query", "n", "--horizon", 1)
    assert doc["result"]["value"] == "1"


def test_resource_bound_exit_code():
    code, doc = call_json("exact", P2P, "--query", "transmissions", "--max-states", 100)
    assert code == 4 and doc["error"]["kind"] == "StateBound"


def test_runtime_error_exit_code():
    code, doc = call_json("exact", GEAR, "--query", "1 div 0 = 1")
    assert code == 3 and doc["error"]["kind"] == "DivisionByZero"


def test_bad_query_is_a_diagnostic():
    assert call("exact", GEAR, "--query", "nosuchthing")[0] == 1
    assert call("exact", GEAR, "--query", "door", "--reach", 2)[0] == 1


def test_export(tmp_path):
    out = tmp_path / "gear.tra"
    code, doc = call_json("export", GEAR, "--format", "tra", "--output", out)
    assert code == 0 and out.read_text().splitlines()[0] == "80 264"
    code, text, _ = call("export", P2P, "--const", "N=1", "--const", "K=1", "--format", "sta", "--abstract-counters")
    assert text.splitlines() == ["(file,n)", "0 file={0|->emp} n=0", "1 file={0|->downloading} n=0", "2 file={0|->ok} n=0"]
    assert call("export", GEAR, "--format", "dot")[1].startswith("digraph")


def test_jobs_default_from_environment(monkeypatch):
    from pebc.cli import build_parser

    monkeypatch.setenv("PEBC_JOBS", "3")
    args = build_parser().parse_args(["smc", str(GEAR), "--query", "door_open"])
    assert args.jobs == 3


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "pebc.cli", "check", str(GEAR)], capture_output=True, text=True)
    assert r.returncode == 0 and "GEAR: ok" in r.stdout
