import json
import subprocess
import sys

import pytest

from dissimbatch.cli import main


@pytest.fixture
def data(tmp_path):
    path = tmp_path / "d.csv"
    assert main(["gen", "--n", "150", "--cat-size", "3", "--p0", "0.1", "--seed", "4", "--out", str(path)]) == 0
    return path


def run(args, capsys):
    code = main([str(a) for a in args])
    return code, capsys.readouterr()


def test_gen_prints_summary(tmp_path, capsys):
    code, out = run(["gen", "--n", "50", "--out", tmp_path / "d.csv"], capsys)
    assert code == 0
    assert json.loads(out.out)["n"] == 50


def test_gen_from_config(tmp_path, capsys):
    ini = tmp_path / "c.ini"
    ini.write_text("[model]\nn = 30\nd = 3\n[categorical]\nkind = uniform\ncat_size = 2\n[rng]\nseed = 5\n")
    code, out = run(["gen", "--config", ini, "--out", tmp_path / "d.csv"], capsys)
    assert code == 0 and json.loads(out.out)["d"] == 3


def test_graph(data, tmp_path, capsys):
    code, out = run(["graph", "--data", data, "--r", "0.2", "--edges", tmp_path / "e.csv"], capsys)
    assert code == 0
    assert json.loads(out.out)["max_degree"] >= 1
    assert (tmp_path / "e.csv").read_text().startswith("u,v\n")


@pytest.mark.parametrize("algo", ["greedy", "lll"])
def test_decompose_then_verify(data, tmp_path, capsys, algo):
    out_file = tmp_path / "b.csv"
    code, _ = run(["decompose", "--data", data, "--r", "0.2", "--k", "2", "--algo", algo, "--seed", "1", "--out", out_file], capsys)
    assert code == 0
    code, out = run(["verify", "--data", data, "--r", "0.2", "--k", "2", "--decomposition", out_file], capsys)
    assert code == 0 and out.out.startswith("valid: true")
    code, out = run(["verify", "--data", data, "--r", "0.2", "--k", "1", "--decomposition", out_file], capsys)
    assert code == 1 and out.out.startswith("valid: false")


@pytest.mark.parametrize("algo", ["direct", "kway", "upper"])
def test_subset(data, tmp_path, capsys, algo):
    out_file = tmp_path / "s.csv"
    code, out = run(["subset", "--data", data, "--r", "0.2", "--k", "2", "--algo", algo, "--out", out_file], capsys)
    assert code == 0
    if algo != "upper":
        code, out = run(["verify", "--data", data, "--r", "0.2", "--k", "2", "--subset", out_file], capsys)
        assert code == 0 and "valid: true" in out.out


def test_exact_on_small_data(tmp_path, capsys):
    path = tmp_path / "d.csv"
    run(["gen", "--n", "10", "--seed", "2", "--out", path], capsys)
    code, out = run(["decompose", "--data", path, "--r", "0.5", "--k", "2", "--algo", "exact"], capsys)
    assert code == 0
    code, out = run(["subset", "--data", path, "--r", "0.5", "--k", "2", "--algo", "exact"], capsys)
    assert code == 0


def test_infeasible_exit_code(tmp_path, capsys):
    path = tmp_path / "d.csv"
    run(["gen", "--n", "10", "--p0", "1", "--out", path], capsys)
    code, out = run(["decompose", "--data", path, "--r", "0.1", "--k", "2"], capsys)
    assert code == 1 and "infeasible" in out.err


def test_invalid_input_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("idx,corrupted,y,x0,x1\n0,0,0,0.1\n")
    code, out = run(["graph", "--data", bad, "--r", "0.1"], capsys)
    assert code == 2 and "row 2" in out.err
    code, _ = run(["graph", "--data", tmp_path / "missing.csv", "--r", "0.1"], capsys)
    assert code == 2
    code, _ = run(["experiment", "--preset", "degree-scaling", "--config", tmp_path / "missing.ini", "--out", tmp_path], capsys)
    assert code == 2


def test_regime_violation_exit_code(tmp_path, capsys):
    ini = tmp_path / "e.ini"
    ini.write_text("[experiment]\nr_exponent = 0.9\n")
    code, out = run(["experiment", "--preset", "degree-scaling", "--config", ini, "--out", tmp_path / "x"], capsys)
    assert code == 2 and "Lambda" in out.err


def test_budget_exhausted_exit_code(tmp_path, capsys):
    path = tmp_path / "d.csv"
    run(["gen", "--n", "40", "--out", path], capsys)
    code, out = run(["decompose", "--data", path, "--r", "0.9", "--k", "1", "--algo", "lll", "--theta", "0.01", "--max-rounds", "5"], capsys)
    assert code == 3 and "budget" in out.err


def test_experiment_and_report(tmp_path, capsys):
    out_dir = tmp_path / "exp"
    code, out = run(["experiment", "--preset", "variance-nsim", "--trials", "10", "--out", out_dir], capsys)
    assert code == 0 and json.loads(out.out)["records"] == 20
    code, out = run(["report", "--in", out_dir], capsys)
    assert code == 0 and "[PASS]" in out.out
    assert (out_dir / "summary.csv").exists()


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "dissimbatch", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("gen", "graph", "decompose", "subset", "verify", "experiment", "report"):
        assert cmd in res.stdout
