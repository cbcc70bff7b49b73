import csv
import json
import subprocess
import sys

import pytest

from selgen import cli
from selgen._io import sha256_file
from selgen.simulator import AuditReport


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def sim(tmp_path):
    path = tmp_path / "sim.jsonl"
    assert run("simulate", "--n", 2500, "--seed", 3, "--out", path) == 0
    return path


def test_version():
    out = subprocess.run([sys.executable, "-m", "selgen", "--version"], capture_output=True, text=True, check=True)
    assert out.stdout.strip().startswith("selgen ")


def test_calibrate_apply_evaluate(tmp_path, sim):
    res = tmp_path / "res.json"
    code = run("calibrate", "--data", sim, "--out", res)
    assert code in (0, 3)
    payload = json.loads(res.read_text())
    assert (code == 0) == (payload["bounded"] == "Success")
    dec = tmp_path / "dec.jsonl"
    assert run("apply", "--result", res, "--data", sim, "--out", dec) == 0
    lines = [json.loads(x) for x in dec.read_text().splitlines()]
    assert len(lines) == 2500 and {d["decision"] for d in lines} <= {"accept", "idk"}
    rep = tmp_path / "rep.json"
    assert run("evaluate", "--result", res, "--data", sim, "--out", rep) == 0
    assert set(json.loads(rep.read_text())) >= {"fdr_e", "efficiency", "n_test", "n_selected"}


def test_budget_mapping_recorded_at_full_precision(tmp_path, sim):
    res = tmp_path / "res.json"
    run("calibrate", "--data", sim, "--method", "semi-single", "--eps", 0.25, "--delta", 0.02, "--out", res)
    budget = json.loads(res.read_text())["budget"]
    assert budget == {"eps_s": 0.25, "delta_s": (0.02 - 1e-5) / 2, "delta_e": (0.02 - 1e-5) / 2, "delta_w": 1e-5, "q": 5}


def test_manifest_contents(tmp_path, sim):
    res = tmp_path / "res.json"
    run("calibrate", "--data", sim, "--method", "sup", "--seed", 7, "--out", res)
    man = json.loads((tmp_path / "res.json.manifest.json").read_text())
    assert man["command"] == "calibrate" and man["seed"] == 7
    assert man["inputs"] == {str(sim): sha256_file(sim)}
    assert {"selgen", "python", "numpy", "scipy", "kernel_backend"} <= set(man["versions"])
    again = tmp_path / "again.json"
    argv = [a if a != str(res) else str(again) for a in man["argv"]]
    cli.main(argv)
    assert again.read_text() == res.read_text()


def test_unreachable_target_exits_3_and_writes_result(tmp_path, sim):
    res = tmp_path / "res.json"
    assert run("calibrate", "--data", sim, "--eps", 1e-9, "--out", res) == 3
    payload = json.loads(res.read_text())
    assert payload["bounded"] == "Fail" and 0.0 <= payload["u_hat"] <= 1.0


def test_invalid_input_exits_2_with_line(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id": "a", "f_m1": 0.5, "f_e": 0.5, "v": 0}\n{"id": "b", "f_m1": 1.5, "f_e": 0.5, "v": 0}\n')
    assert run("calibrate", "--data", bad, "--method", "sup", "--out", tmp_path / "r.json") == 2
    assert "line 2" in capsys.readouterr().err


def test_missing_f_m2_exits_2(tmp_path):
    data = tmp_path / "d.jsonl"
    data.write_text('{"id": "a", "f_m1": 0.5, "f_e": 0.5, "e": 1, "v": 1}\n')
    assert run("calibrate", "--data", data, "--method", "semi-ms", "--out", tmp_path / "r.json") == 2


def test_bad_budget_exits_2(tmp_path, sim):
    assert run("calibrate", "--data", sim, "--delta", 1e-6, "--out", tmp_path / "r.json") == 2


def test_internal_error_exits_1(tmp_path, sim, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("boom")

    monkeypatch.setattr(cli, "run_method", boom)
    assert run("calibrate", "--data", sim, "--out", tmp_path / "r.json") == 1


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("SELGEN_OUTPUT_DIR", str(tmp_path))
    assert run("simulate", "--n", 10, "--out", "s.jsonl") == 0
    assert (tmp_path / "s.jsonl").exists() and (tmp_path / "s.jsonl.manifest.json").exists()


def test_verify_pac_main_guarantee_passes(tmp_path):
    out = tmp_path / "audit.json"
    assert run("verify-pac", "--claim", "theorem1", "--trials", 200, "--seed", 1, "--out", out) == 0
    rep = json.loads(out.read_text())
    assert rep["pass"] and rep["violations"] <= 10


def test_verify_pac_failure_exits_5(tmp_path, monkeypatch):
    fake = AuditReport("fer", trials=10, violations=9, delta=0.02, allowed=1,
                       frequency=0.9, ci_low=0.55, ci_high=0.99, passed=False)
    monkeypatch.setattr(cli, "mc_verify", lambda *a, **k: fake)
    assert run("verify-pac", "--claim", "fer", "--out", tmp_path / "a.json") == 5


def test_report_outputs(tmp_path, sim):
    assert run("report", "--data", sim, "--methods", "sup,semi-single", "--n-splits", 3, "--out", tmp_path / "rep") == 0
    rows = list(csv.reader((tmp_path / "rep.csv").open()))
    assert rows[0] == ["split", "method", "fdr_e", "efficiency"] and len(rows) == 7
    summary = json.loads((tmp_path / "rep.json").read_text())
    assert set(summary["methods"]) == {"sup", "semi-single"}


def test_report_rejects_unknown_method(tmp_path, sim):
    with pytest.raises(SystemExit) as exc:
        run("report", "--data", sim, "--methods", "sup,magic", "--out", tmp_path / "rep")
    assert exc.value.code == 2
