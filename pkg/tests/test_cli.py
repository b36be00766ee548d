from __future__ import annotations

import csv
import io
import json
import subprocess
import sys

import pytest

from artifact.brokenline import FlowField, RectDomain, flow_from_boundary
from artifact.brokenline.bricks import Decomposition
from artifact.cli.main import (EXIT_INTEGRITY, EXIT_NOT_STABILIZED, EXIT_OK, EXIT_PARAMETER,
                               dispatch, parse_params)
from artifact.cli.output import (LLN_CONVERGENCE, PHASE_SCAN, Column, ResultTable, RunManifest,
                                 emit_plot_data, format_cell)
from artifact.errors import ParameterError, SchemaError
from artifact.lpp import LlnTable, LppInstance


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = dispatch(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def run_json(argv):
    code, out, err = run([*argv, "--json"])
    assert code == EXIT_OK, err
    return json.loads(out)


def test_lpp_solve_both_methods_agree():
    doc = run_json(["lpp", "solve", "--family", "exp", "--params", "alpha=1", "--N", "8", "--M", "8",
                    "--seed", "42", "--method", "both"])
    a, b = doc["result"]["solutions"]
    assert {a["method"], b["method"]} == {"dp", "brokenline"}
    assert a["value"] == pytest.approx(b["value"], abs=1e-9)
    assert doc["manifest"]["seed"] == 42


def test_scan_with_no_particles_is_all_zeros():
    doc = run_json(["arw", "scan", "--mu-grid", "0", "--lambda-grid", "1", "--M-grid", "10",
                    "--r-grid", "1", "--trials", "10", "--seed", "1"])
    assert [row["estimate"] for row in doc["table"]["rows"]] == [0.0]


def test_malformed_flag_exits_two_without_artifacts(tmp_path, capsys):
    target = tmp_path / "out.csv"
    code, out, _ = run(["lpp", "solve", "--N", "abc", "--csv", str(target)])
    assert code == EXIT_PARAMETER and out == "" and not target.exists()
    code, _, _ = run(["lpp", "solve", "--no-such-flag"])
    assert code == EXIT_PARAMETER


def test_missing_parameters_are_parameter_errors():
    code, _, err = run(["lpp", "solve", "--family", "exp", "--params", "beta=1", "--N", "3", "--M", "3",
                        "--seed", "1"])
    assert code == EXIT_PARAMETER and "alpha" in err
    code, _, _ = run(["lpp", "lln", "--family", "exp", "--params", "alpha=1", "--beta", "0.01",
                      "--N-list", "5", "--trials", "4", "--seed", "1"])
    assert code == EXIT_PARAMETER


def test_step_cap_exits_three():
    code, _, err = run(["arw", "stabilize", "--mu", "2", "--lambda", "0.1", "--M", "20",
                        "--step-cap", "5", "--seed", "3"])
    assert code == EXIT_NOT_STABILIZED and "not stabilized" in err


def test_conservation_failure_exits_one(tmp_path):
    doc = flow_from_boundary(RectDomain(1, 1), xi=[[5]]).to_dict()
    doc["edges"][0]["value"] = 9
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(["bl", "decompose", "--input", str(path), "--seed", "0"])
    assert code == EXIT_INTEGRITY and "integrity error" in err


def test_parse_params():
    assert parse_params(["alpha=1", "lam_plus=0.5,lam_minus=0.25"]) == \
        {"alpha": 1.0, "lam_plus": 0.5, "lam_minus": 0.25}
    with pytest.raises(ParameterError):
        parse_params(["alpha"])
    with pytest.raises(ParameterError):
        parse_params(["alpha=x"])


def test_same_seed_gives_identical_integer_outputs():
    argv = ["bl", "sample", "--family", "geo", "--params", "lam=0.5", "--N", "6", "--M", "5", "--seed", "9"]
    a, b = run_json(argv), run_json(argv)
    assert a["result"] == b["result"]
    c = run_json([*argv[:-1], "10"])
    assert c["result"] != a["result"]


def test_thread_count_does_not_change_results():
    argv = ["lpp", "lln", "--family", "geo", "--params", "lam=0.25", "--N-list", "8,16",
            "--trials", "12", "--seed", "5"]
    assert run_json([*argv, "--threads", "1"])["result"] == run_json([*argv, "--threads", "3"])["result"]


def test_seed_falls_back_to_the_environment(monkeypatch):
    argv = ["lpp", "solve", "--family", "geo", "--params", "lam=0.5", "--N", "4", "--M", "4"]
    monkeypatch.setenv("LL_SEED", "77")
    doc = run_json(argv)
    assert doc["manifest"]["seed"] == 77
    assert doc["result"] == run_json([*argv, "--seed", "77"])["result"]
    monkeypatch.setenv("LL_SEED", "-3")
    assert run(argv)[0] == EXIT_PARAMETER


def test_entropy_seed_is_echoed(monkeypatch):
    monkeypatch.delenv("LL_SEED", raising=False)
    code, out, err = run(["lpp", "solve", "--family", "geo", "--params", "lam=0.5", "--N", "2", "--M", "2"])
    assert code == EXIT_OK and "OS entropy" in err
    seed = int(err.split()[1])
    assert f"seed={seed}" in out
    code, _, err = run(["lpp", "solve", "--family", "geo", "--params", "lam=0.5", "--N", "2", "--M", "2",
                        "--quiet"])
    assert code == EXIT_OK and err == ""


def test_json_artifacts_reimport_to_equal_values(tmp_path):
    inst_path, field_path, dec_path = tmp_path / "inst.json", tmp_path / "field.json", tmp_path / "dec.json"
    doc = run_json(["lpp", "solve", "--family", "geo", "--params", "lam=0.5", "--N", "5", "--M", "4",
                    "--seed", "2", "--export", str(inst_path)])
    inst = LppInstance.from_dict(json.loads(inst_path.read_text()))
    again = run_json(["lpp", "solve", "--input", str(inst_path), "--method", "dp", "--seed", "0"])
    assert again["result"]["solutions"][0]["value"] == doc["result"]["solutions"][0]["value"]
    assert inst.N == 5 and inst.M == 4

    sampled = run_json(["bl", "sample", "--family", "exp", "--params", "alpha_plus=0.5,alpha_minus=0.5",
                        "--N", "4", "--M", "4", "--seed", "3", "--output", str(field_path)])
    field = FlowField.from_dict(json.loads(field_path.read_text()))
    assert field == FlowField.from_dict(sampled["result"]["field"])
    run_json(["bl", "decompose", "--input", str(field_path), "--output", str(dec_path), "--seed", "0"])
    dec = Decomposition.from_dict(json.loads(dec_path.read_text()))
    assert Decomposition.from_dict(dec.to_dict()) == dec

    lln = run_json(["lpp", "lln", "--family", "exp", "--params", "alpha=1", "--N-list", "5",
                    "--trials", "4", "--seed", "4"])
    table = LlnTable.from_dict(lln["result"]["lln"])
    assert LlnTable.from_dict(json.loads(json.dumps(table.to_dict()))).to_dict() == table.to_dict()
    assert ResultTable.from_dict(lln["table"]) == ResultTable.from_dict(json.loads(json.dumps(lln["table"])))
    assert RunManifest.from_dict(lln["manifest"]).to_dict() == lln["manifest"]


def test_manifest_schema_errors():
    with pytest.raises(SchemaError):
        RunManifest.from_dict({"seed": 1})
    with pytest.raises(SchemaError):
        ResultTable.from_dict({"rows": []})


def test_csv_output_is_rfc4180_with_exact_floats(tmp_path):
    target = tmp_path / "lln.csv"
    doc = run_json(["lpp", "lln", "--family", "exp", "--params", "alpha=1", "--N-list", "6,12",
                    "--trials", "5", "--seed", "8", "--csv", str(target)])
    raw = target.read_bytes()
    assert raw.count(b"\r\n") == 3
    rows = list(csv.DictReader(io.StringIO(raw.decode(), newline="")))
    assert [float(r["mean"]) for r in rows] == [r["mean"] for r in doc["table"]["rows"]]


def test_intersections_command(tmp_path):
    doc = run_json(["bl", "intersections", "--family", "geo", "--params", "lam=0.5", "--N", "8", "--M", "8",
                    "--line", "horizontal", "--seed", "6", "--plot-data", str(tmp_path / "h.csv")])
    assert doc["result"]["summary"]["kind"] == "horizontal"
    header = (tmp_path / "h.csv").read_text().splitlines()[0]
    assert header == "m,n,count,frequency,exact"
    code, _, _ = run(["bl", "intersections", "--family", "geo", "--params", "lam=0.5", "--N", "2",
                      "--M", "2", "--line", "vertical", "--at", "40", "--seed", "6"])
    assert code == EXIT_PARAMETER


def test_traps_command_reports_no_replay_failures():
    doc = run_json(["arw", "traps", "--mu", "0.2", "--lambda", "1", "--K", "10", "--trials", "5",
                    "--seed", "11"])
    assert "integrity_error" not in doc["result"]


def test_plot_data_from_an_lln_table_has_three_columns():
    table = ResultTable.from_records([{"N": 10, "mean": 3.5, "limit": 4.0, "se": 0.1}],
                                     {"N": "int", "mean": "float", "limit": "float", "se": "float"})
    text = emit_plot_data(table, LLN_CONVERGENCE)
    assert text == "N,mean,limit\r\n10,3.5,4\r\n"


def test_plot_data_from_an_empty_table_is_only_the_header(tmp_path):
    table = ResultTable([Column("N", "int"), Column("mean", "float"), Column("limit", "float")])
    target = tmp_path / "empty.csv"
    emit_plot_data(table, LLN_CONVERGENCE, target)
    assert target.read_text() == "N,mean,limit\n"
    assert target.read_bytes() == b"N,mean,limit\r\n"


def test_plot_data_from_a_phase_scan_is_long_format():
    doc = run_json(["arw", "scan", "--mu-grid", "0.2,0.4", "--lambda-grid", "1", "--M-grid", "5",
                    "--r-grid", "1,2", "--trials", "5", "--seed", "12"])
    table = ResultTable.from_dict(doc["table"])
    lines = emit_plot_data(table, PHASE_SCAN).splitlines()
    assert lines[0] == "mu,lambda,M,r,estimate,se" and len(lines) == 5


def test_plot_data_schema_mismatch_is_a_parameter_error():
    table = ResultTable.from_records([{"N": 1}], {"N": "int"})
    with pytest.raises(ParameterError):
        emit_plot_data(table, LLN_CONVERGENCE)
    with pytest.raises(ParameterError):
        emit_plot_data(table, "scatter")


def test_format_cell():
    assert format_cell(0.1) == "0.10000000000000001"
    assert float(format_cell(0.1)) == 0.1
    assert format_cell(True) == "true" and format_cell(None) == "" and format_cell(float("nan")) == "nan"


def test_console_script_and_module_entry_points():
    res = subprocess.run([sys.executable, "-m", "artifact", "lpp", "solve", "--family", "geo", "--params",
                          "lam=0.5", "--N", "3", "--M", "3", "--seed", "1", "--json"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["manifest"]["seed"] == 1
    res = subprocess.run([sys.executable, "-m", "artifact", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "lpp" in res.stdout
