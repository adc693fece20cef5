import hashlib
import json
import subprocess
import sys

import jsonschema
import pytest

from ctreserve.cli import SCHEMA_PATH, main
from ctreserve.triangle import builtin_dataset

SCHEMA = json.loads(SCHEMA_PATH.read_text())


def run_json(capsys, *argv):
    assert main([*argv, "--format", "json"]) == 0
    report = json.loads(capsys.readouterr().out)
    jsonschema.validate(report, SCHEMA)
    return report


def test_reserve_taylor_ashe(capsys):
    rep = run_json(capsys, "reserve", "--dataset", "taylor_ashe")
    assert rep["estimates"]["R_hat"] == pytest.approx(18_680_856, rel=1e-6)
    assert rep["estimates"]["mack_msep_pct"] == 13.0995
    assert rep["manifest"]["command"] == "reserve"


def test_reserve_mortgage_text(capsys):
    assert main(["reserve", "--dataset", "mortgage"]) == 0
    out = capsys.readouterr().out
    assert "25.6337 %" in out


def test_reserve_csv(capsys):
    assert main(["reserve", "--dataset", "mortgage", "--format", "csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "statistic,method,value"
    assert "msep_pct,mack,25.6337" in lines


def test_reserve_from_file(tmp_path, capsys):
    f = tmp_path / "ta.csv"
    f.write_text(builtin_dataset("taylor_ashe").to_csv())
    rep = run_json(capsys, "reserve", "--file", str(f))
    assert rep["estimates"]["mack_msep_pct"] == 13.0995


def test_bad_file_exit_code(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("dev,1,2,3\n1,1,2,3\n2,1,0\n3,5\n")
    proc = subprocess.run(
        [sys.executable, "-m", "ctreserve", "reserve", "--file", str(bad)], capture_output=True, text=True
    )
    assert proc.returncode == 2
    err = json.loads(proc.stderr)
    assert err["error"] == "TriangleError" and "(2,2)" in err["message"]


def test_sims_zero_is_config_error(capsys):
    assert main(["bootstrap", "--dataset", "taylor_ashe", "--sims", "0"]) == 2
    assert "ConfigError" in capsys.readouterr().err


def test_bootstrap_outputs_and_determinism(tmp_path, capsys):
    digests = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        argv = ["bootstrap", "--method", "ct", "--dataset", "taylor_ashe", "--sims", "20000", "--seed", "42"]
        assert main([*argv, "--out", str(out), "--emit-samples", "--format", "json"]) == 0
        rep = json.loads(capsys.readouterr().out)
        jsonschema.validate(rep, SCHEMA)
        digests.append(hashlib.sha256((out / "samples.npy").read_bytes()).hexdigest())
        for name in ("report.json", "report.csv", "manifest.json", "histogram.csv"):
            assert (out / name).exists()
    assert digests[0] == digests[1]
    assert rep["manifest"]["config"]["M"] == 20000 and rep["manifest"]["seed"] == 42
    assert sum(rep["histogram"]["counts"]) == 20000
    assert abs(rep["summary"]["msep_pct"] - 13.1039) < 1.0


def test_manifest_reproduces(tmp_path, capsys):
    argv = ["bootstrap", "--method", "mack", "--dataset", "mortgage", "--sims", "3000", "--seed", "9", "--neg-policy", "drop"]
    assert main([*argv, "--out", str(tmp_path / "a"), "--emit-samples"]) == 0
    cfg = json.loads((tmp_path / "a" / "manifest.json").read_text())["config"]
    back = ["bootstrap", "--method", {"mack_residual": "mack"}[cfg["method"]], "--dataset", "mortgage",
            "--sims", str(cfg["M"]), "--seed", str(cfg["seed"]),
            "--neg-policy", {"drop_replicate": "drop"}[cfg["neg_policy"]]]
    assert main([*back, "--out", str(tmp_path / "b"), "--emit-samples"]) == 0
    capsys.readouterr()
    assert (tmp_path / "a" / "samples.npy").read_bytes() == (tmp_path / "b" / "samples.npy").read_bytes()


def test_emit_samples_needs_out(capsys):
    assert main(["bootstrap", "--sims", "10", "--emit-samples"]) == 2


def test_compare_diagnostics(capsys):
    rep = run_json(capsys, "compare", "--dataset", "taylor_ashe", "--sims", "2000")
    z = rep["diagnostics"]["zero_mass"]["max_diagonal"]
    assert (z["i"], z["j"]) == (10, 1)
    assert z["exponent"] == pytest.approx(-52.3031, abs=1e-3)
    assert z["probability"] == pytest.approx(1.9277e-23, rel=5e-4)
    assert len(rep["summary"]["table"]) == 4
    assert rep["diagnostics"]["gamma_q995_excess_pct"] == pytest.approx(36.95, abs=0.01)


def test_compare_mortgage(capsys, tmp_path):
    rep = run_json(capsys, "compare", "--dataset", "mortgage", "--sims", "2000")
    assert rep["diagnostics"]["zero_mass"]["max_diagonal"]["probability"] == pytest.approx(0.1636, abs=1e-4)
    f = tmp_path / "mg.csv"
    f.write_text(builtin_dataset("mortgage").with_cell(9, 1, 24983).to_csv())
    rep = run_json(capsys, "compare", "--file", str(f), "--sims", "2000")
    assert rep["diagnostics"]["zero_mass"]["max_diagonal"]["probability"] == pytest.approx(0.03184, abs=5e-4)
    first = {e["i"]: e for e in rep["diagnostics"]["zero_mass"]["first_column"]}
    assert first[8]["probability"] == pytest.approx(0.03184, abs=5e-4)


def test_dataset_and_file_exclusive(capsys, tmp_path):
    assert main(["reserve", "--dataset", "mortgage", "--file", str(tmp_path / "x.csv")]) == 2
