import json
import subprocess
import sys

import pytest

from contactframe.cli import main
from contactframe.manifold import dump_manifold, builtin_e2


@pytest.fixture
def ex1_csv(tmp_path):
    path = tmp_path / "ex1.csv"
    assert main(["curve", "build", "--example", "ex1", "--span", "0:1", "--step", "0.001",
                 "--out", str(path)]) == 0
    return path


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_t34_example_1(ex1_csv, capsys):
    code, out, _ = run(["verify", "--theorem", "T3.4", "--in", str(ex1_csv)], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["verdict"] == "pass"
    assert rep["lambda"]["min"] == pytest.approx(-1.0)


def test_classify_parallel_tangent_fails(ex1_csv, capsys):
    code, out, _ = run(["classify", "--in", str(ex1_csv), "--kind", "c-parallel-tangent"], capsys)
    assert code == 1
    rep = json.loads(out)
    assert rep["verdict"] == "fails" and rep["max_residual"] >= 1.0


def test_classify_proper_normal_holds(ex1_csv, capsys):
    code, out, _ = run(["classify", "--in", str(ex1_csv), "--kind", "c-proper-normal", "--samples"], capsys)
    assert code == 0
    assert len(json.loads(out)["lambda"]["samples"]) == 1001


def test_manifold_check_e2(capsys):
    code, out, _ = run(["manifold", "check", "--builtin", "e2", "--c2", "2"], capsys)
    assert code == 0 and json.loads(out)["non_sasakian"]


def test_manifold_check_spec_file(tmp_path, capsys):
    doc = dump_manifold(builtin_e2(2.0))
    doc["omega"][0][1][2] = "0.1"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(["manifold", "check", "--spec", str(path)], capsys)
    assert code == 1
    assert json.loads(out)["verdict"] == "fail"


def test_manifold_list(capsys):
    code, out, _ = run(["manifold", "list"], capsys)
    assert code == 0 and "rkmn" in out and "e2 c2" in out


def test_curve_frenet_json_and_csv(ex1_csv, capsys):
    code, out, _ = run(["curve", "frenet", "--in", str(ex1_csv), "--json"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["order"] == 3
    assert rep["curvatures"][0]["min"] == pytest.approx(1.0)
    code, out, _ = run(["curve", "frenet", "--in", str(ex1_csv)], capsys)
    lines = out.splitlines()
    assert lines[0] == "s,k1,k2" and len(lines) == 1002


def test_sweep_output(tmp_path, capsys):
    path = tmp_path / "sweep.csv"
    code = main(["sweep", "--family", "helix", "--c2", "1,2", "--theta", "2*pi/3,3*pi/4",
                 "--kinds", "c-proper-normal,c-parallel-tangent", "--out", str(path)])
    assert code == 0
    lines = path.read_text().splitlines()
    assert lines[0] == "family,c2,theta,kind,verdict,lambda_min,lambda_max,max_residual"
    assert len(lines) == 1 + 8


def test_deterministic_output(tmp_path):
    outs = []
    for i in range(2):
        a, b = tmp_path / f"c{i}.csv", tmp_path / f"s{i}.csv"
        main(["curve", "build", "--example", "e2-helix", "--c2", "2", "--theta", "3*pi/4",
              "--span", "0:1", "--step", "0.01", "--out", str(a)])
        main(["sweep", "--family", "circle", "--c2", "1", "--theta", "2", "--kinds",
              "c-proper-tangent", "--out", str(b)])
        outs.append((a.read_bytes(), b.read_bytes()))
    assert outs[0] == outs[1]


@pytest.mark.parametrize("argv", [
    [],
    ["classify", "--in", "x.csv"],
    ["classify", "--in", "x.csv", "--kind", "c-biharmonic"],
    ["curve", "build", "--example", "ex1", "--span", "1:0"],
    ["curve", "build", "--example", "e2-helix", "--theta", "2"],
    ["manifold", "check"],
    ["sweep", "--family", "helix", "--c2", "1", "--theta", "2", "--kinds", "nonsense"],
])
def test_usage_errors_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2 and err


def test_computational_errors_exit_2(tmp_path, capsys):
    code, _, err = run(["classify", "--in", str(tmp_path / "missing.csv"), "--kind",
                        "c-proper-normal"], capsys)
    assert code == 2 and json.loads(err)["error"] == "FileNotFoundError"
    code, _, err = run(["curve", "build", "--example", "e2-circle", "--c2", "2", "--theta",
                        "pi/4"], capsys)
    assert code == 2 and json.loads(err)["error"] == "HypothesisViolation"


def test_verify_order_mismatch_exit_2(ex1_csv, capsys):
    code, _, err = run(["verify", "--theorem", "T3.1", "--in", str(ex1_csv)], capsys)
    assert code == 2 and json.loads(err)["error"] == "OrderMismatchError"


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "contactframe", "manifold", "list"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "rkmn" in proc.stdout
