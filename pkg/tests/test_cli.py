import csv
import io
import json
import subprocess
import sys

import pytest

from ghz_selftest import cli
from ghz_selftest import strategy as sm


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def diagnostic(err):
    lines = err.strip().splitlines()
    assert len(lines) == 1
    return json.loads(lines[0])


@pytest.fixture
def ideal_file(tmp_path):
    path = tmp_path / "ideal.json"
    assert run("ideal", "--n", "1", "--out", str(path))[0] == 0
    return path


def test_ideal_then_verify(ideal_file):
    assert sm.validate(sm.load(ideal_file)).ok
    code, out, _ = run("verify", "--strategy", str(ideal_file))
    assert code == 0
    data = json.loads(out)
    assert data["winning_probability_text"] == "1.000000000"
    assert data["relations"]["anticommute"]["max_residual"] <= 1e-9


def test_classical():
    code, out, _ = run("classical", "--n", "1")
    assert code == 0
    data = json.loads(out)
    assert data["classical_value"] == 0.75 and data["exact"] == "3/4"


def test_sweep_rows():
    code, out, _ = run("sweep", "--n", "2", "--noise", "0:0.3:0.05", "--seed", "42")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 7
    assert list(rows[0]) == ["theta", "epsilon", "max_keyineq_residual", "max_anticommute_residual",
                             "extraction_residual", "fidelity", "bound_ratio"]
    assert float(rows[0]["theta"]) == 0 and float(rows[0]["epsilon"]) == 0
    assert float(rows[0]["extraction_residual"]) <= 1e-9
    assert [float(r["theta"]) for r in rows] == [0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3]
    for r in rows:
        assert 0 <= float(r["epsilon"]) <= 1 and 0 <= float(r["fidelity"]) <= 1 + 1e-12


def test_sweep_is_deterministic():
    args = ("sweep", "--n", "1", "--noise", "0:0.2:0.1", "--kind", "crosstalk", "--seed", "3")
    first = run(*args)[1]
    assert first == run(*args)[1]
    assert first == run(*args, "--jobs", "2")[1]


def test_sweep_json_and_digits():
    code, out, _ = run("sweep", "--n", "1", "--noise", "0.1:0.1:1", "--format", "json")
    assert code == 0
    rows = json.loads(out)
    assert len(rows) == 1 and rows[0]["bound_ratio"] > 0
    csv_out = run("sweep", "--n", "1", "--noise", "0.1:0.1:1")[1]
    value = csv_out.splitlines()[1].split(",")[1]
    assert len(value.replace(".", "").lstrip("0").split("e")[0]) <= 12


def test_grid_values():
    assert cli.Grid.parse("0:0.3:0.05").values()[-1] == 0.3
    assert cli.Grid.parse("0.2").values() == [0.2]


def test_extract_and_simulate():
    code, out, _ = run("extract", "--n", "1", "--theta", "0.1")
    assert code == 0
    assert json.loads(out)["method"] == "dense"
    code, out, _ = run("simulate", "--n", "1", "--rounds", "2000", "--seed", "1")
    data = json.loads(out)
    assert code == 0 and data["frequency"] == 1.0 and data["wins"] == 2000


def test_out_file(tmp_path):
    path = tmp_path / "rows.csv"
    code, out, _ = run("sweep", "--noise", "0:0.1:0.1", "--out", str(path))
    assert code == 0 and out == ""
    assert path.read_text().startswith("theta,")


@pytest.mark.parametrize("argv, code", [
    (["sweep", "--noise", "0:0.3:0"], 2),
    (["sweep", "--noise", "0.3:0:0.1"], 2),
    (["sweep", "--noise", "a:b:c"], 2),
    (["sweep", "--n", "0"], 2),
    (["frobnicate"], 2),
    (["verify", "--strategy", "/does/not/exist.json"], 2),
    (["classical", "--n", "3"], 2),
    (["sweep", "--tol", "-1"], 2),
])
def test_config_errors(argv, code):
    got, out, err = run(*argv)
    assert got == code and out == ""
    diag = diagnostic(err)
    assert diag["code"] == code and diag["message"]


def test_schema_error(tmp_path):
    doc = sm.to_json(sm.ideal_strategy(1))
    doc["singles"][2]["matrix"]["rows"] = 3
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, _, err = run("verify", "--strategy", str(path))
    assert code == 3
    assert diagnostic(err)["path"] == "$.singles[2].matrix"


def test_dimension_error(monkeypatch):
    monkeypatch.setenv("GHZ_SELFTEST_MAX_ENTRIES", "100")
    code, _, err = run("extract", "--n", "2")
    assert code == 4 and diagnostic(err)["error"] == "dimension"


def test_invalid_strategy_is_numeric_error(tmp_path):
    doc = sm.to_json(sm.ideal_strategy(1))
    doc["singles"][0]["matrix"]["entries"][0] = [2.0, 0.0]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, _, err = run("verify", "--strategy", str(path))
    assert code == 5 and diagnostic(err)["error"] == "invalid-strategy"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ghz_selftest", "classical", "--n", "1"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["classical_value"] == 0.75
