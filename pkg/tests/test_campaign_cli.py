import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from helpers import scalar_problem
from scare import BenchmarkSpec, SolverConfig, make_benchmark
from scare.campaign import COUNTS_HEADER, HISTORY_HEADER, export_counts, export_history, run_campaign, run_one
from scare.cli import main, verify


def _write_problem(tmp_path, p, name="p.json"):
    path = tmp_path / name
    with open(path, "w") as fp:
        p.dump(fp)
    return str(path)


def test_run_one_records_failure_without_raising():
    rec = run_one(BenchmarkSpec("ex6"), "mnt")
    assert rec.status == "error" and rec.error and not rec.converged
    ok = run_one(BenchmarkSpec("ex1"), "fpc")
    assert ok.converged and ok.report.nres <= 1e-12


def test_not_converged_status():
    rec = run_one(BenchmarkSpec("ex3"), "fpc", SolverConfig(max_outer=2))
    assert rec.status == "not-converged"


def test_campaign_order_and_threads(monkeypatch):
    specs = [BenchmarkSpec("ex3"), BenchmarkSpec("ex1")]
    serial = run_campaign(specs, ["fpc", "gl-fp"])
    monkeypatch.setenv("SCARE_THREADS", "3")
    threaded = run_campaign(specs, ["fpc", "gl-fp"])
    key = [(r.benchmark, r.solver) for r in serial]
    assert key == [("ex3", "fpc"), ("ex3", "gl-fp"), ("ex1", "fpc"), ("ex1", "gl-fp")]
    assert key == [(r.benchmark, r.solver) for r in threaded]
    for a, b in zip(serial, threaded):
        np.testing.assert_array_equal(a.report.x, b.report.x)


def test_exports():
    recs = run_campaign([BenchmarkSpec("ex4")], ["fpc", "fpc-nt"])
    rows = list(csv.DictReader(io.StringIO(export_counts(recs))))
    assert tuple(rows[0]) == COUNTS_HEADER and len(rows) == 2
    assert rows[1]["solver"] == "fpc-nt" and int(rows[1]["lyap_solves"]) > 0
    hist = list(csv.reader(io.StringIO(export_history(recs[0]))))
    assert tuple(hist[0]) == HISTORY_HEADER
    assert len(hist) == recs[0].report.outer_iterations + 1
    assert float(hist[-1][2]) == recs[0].report.nres


def test_cli_solve_and_verify(tmp_path, capsys):
    prob = _write_problem(tmp_path, make_benchmark("ex4"))
    out = tmp_path / "x.json"
    hist = tmp_path / "h.csv"
    assert main(["solve", "--problem", prob, "--solver", "fpc", "--out", str(out), "--history", str(hist)]) == 0
    doc = json.loads(out.read_text())
    assert doc["converged"] and doc["nres"] <= 1e-12
    assert hist.read_text().startswith("iter,phase,nres,wall_ns")
    assert main(["verify", "--problem", prob, "--x", str(out)]) == 0
    assert json.loads(capsys.readouterr().out)["verified"]


def test_cli_verify_rejects_wrong_matrix(tmp_path):
    prob = _write_problem(tmp_path, make_benchmark("ex1"))
    x = tmp_path / "x.json"
    x.write_text(json.dumps(np.eye(2).tolist()))
    assert main(["verify", "--problem", prob, "--x", str(x), "--out", str(tmp_path / "v.json")]) == 2
    assert not json.loads((tmp_path / "v.json").read_text())["verified"]


def test_verify_scalar_uses_bisection():
    p = scalar_problem(1.0, 1.0, 1.0, 1.0)
    doc = verify(p, [[1 + np.sqrt(2)]])
    assert doc["oracle"] == "scalar-bisection" and doc["verified"]


def test_cli_exit_codes(tmp_path):
    prob = _write_problem(tmp_path, make_benchmark("ex3"))
    assert main(["solve", "--problem", prob, "--solver", "fpc", "--max-iter", "2", "--out", str(tmp_path / "a")]) == 2
    prob6 = _write_problem(tmp_path, make_benchmark("ex6"), "p6.json")
    assert main(["solve", "--problem", prob6, "--solver", "mnt", "--out", str(tmp_path / "b")]) == 4
    assert main(["solve", "--problem", str(tmp_path / "missing.json")]) == 3
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["solve", "--problem", str(bad)]) == 3
    assert main(["solve", "--problem", prob, "--tol", "-1"]) == 3
    with pytest.raises(SystemExit) as info:
        main(["solve"])
    assert info.value.code == 3
    assert main(["bench", "--examples", "ex42", "--out", str(tmp_path / "c")]) == 3


def test_cli_bench(tmp_path, capsys):
    out = tmp_path / "bench"
    assert main(["bench", "--examples", "ex1,ex5:5", "--solvers", "fpc,gl-fp", "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "counts.csv")))
    assert [(r["benchmark"], r["solver"]) for r in rows] == [
        ("ex1", "fpc"), ("ex1", "gl-fp"), ("ex5(5)", "fpc"), ("ex5(5)", "gl-fp")]
    assert (out / "history" / "ex5(5)_gl-fp.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["outer_tol"] == 1e-12 and len(summary["runs"]) == 4
    assert capsys.readouterr().out.startswith("benchmark,solver,status")


def test_console_module_runs():
    proc = subprocess.run([sys.executable, "-m", "scare.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "bench" in proc.stdout
