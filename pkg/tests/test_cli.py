"""End-to-end CLI runs through a fresh interpreter per invocation."""

import json
import shutil
import subprocess
import sys

import numpy as np
import pytest
import scipy.io

from stokes_schur.grid import make_grid
from stokes_schur.operators import build_operator_set
from stokes_schur.schur import build_schur_neumann


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "stokes_schur", *args],
        capture_output=True,
        text=True,
    )


def test_check_default_passes_and_reports_json():
    proc = run_cli("check")
    assert proc.returncode == 0, proc.stderr
    payload = json.loads(proc.stdout)
    assert payload["all_passed"] is True
    assert payload["ns"] == [2, 3, 4, 8]
    assert payload["modes"] == ["boundary"]
    assert payload["seed"] == 0
    assert len(payload["checks"]) == 44
    assert all(row["passed"] for row in payload["checks"])


def test_check_csv_format():
    proc = run_cli("check", "--n", "2", "--format", "csv")
    assert proc.returncode == 0
    lines = proc.stdout.splitlines()
    assert lines[0] == "name,statement,n,mode,measured_error,tolerance,passed,error,runtime_ms"
    assert len(lines) == 12


def test_check_stdout_is_byte_identical():
    a = run_cli("check", "--n", "2,4", "--seed", "5")
    b = run_cli("check", "--n", "2,4", "--seed", "5")
    assert a.returncode == b.returncode == 0
    assert a.stdout == b.stdout


def test_check_out_files_are_byte_identical(tmp_path):
    f1 = tmp_path / "r1.json"
    f2 = tmp_path / "r2.json"
    assert run_cli("check", "--n", "2,4", "--out", str(f1)).returncode == 0
    assert run_cli("check", "--n", "2,4", "--out", str(f2)).returncode == 0
    assert f1.read_bytes() == f2.read_bytes()


def test_check_oversize_grid_exits_nonzero_with_report():
    proc = run_cli("check", "--n", "64")
    assert proc.returncode == 1
    payload = json.loads(proc.stdout)
    assert payload["all_passed"] is False
    failed = [row for row in payload["checks"] if not row["passed"]]
    assert len(failed) == 7
    assert all("DenseCapError" in row["error"] for row in failed)


def test_check_full_mode_flag():
    proc = run_cli("check", "--n", "2,4", "--mode", "full")
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["modes"] == ["full"]
    assert all(row["mode"] == "full" for row in payload["checks"])


@pytest.mark.parametrize(
    "args",
    [
        ("check", "--n", "abc"),
        ("check", "--n", ""),
        ("check", "--tol-scale", "0"),
        ("check", "--tol-scale", "-2"),
        ("check", "--seed", "-1"),
        ("check", "--seed", str(2**64)),
        ("check", "--mode", "partial"),
        ("check", "--format", "yaml"),
        ("check", "--frobnicate",),
        ("frobnicate",),
        (),
    ],
)
def test_usage_errors_exit_2(args):
    proc = run_cli(*args)
    assert proc.returncode == 2
    assert proc.stderr != ""


def test_export_sparse_operator(tmp_path):
    out = tmp_path / "an.mtx"
    proc = run_cli("export", "--n", "4", "--op", "A_N", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    header = out.read_text().splitlines()[0]
    assert header == "%%MatrixMarket matrix coordinate real general"
    loaded = scipy.io.mmread(str(out)).tocsr()
    ops = build_operator_set(make_grid(4))
    assert (loaded - ops.A_N).nnz == 0


def test_export_dense_schur_operator(tmp_path):
    out = tmp_path / "sn.mtx"
    proc = run_cli("export", "--n", "4", "--op", "S_N", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    header = out.read_text().splitlines()[0]
    assert header == "%%MatrixMarket matrix array real general"
    loaded = np.asarray(scipy.io.mmread(str(out)))
    expected = build_schur_neumann(make_grid(4)).materialize()
    np.testing.assert_allclose(loaded, expected, atol=1e-12)


def test_export_requires_op_and_single_n(tmp_path):
    out = tmp_path / "x.mtx"
    assert run_cli("export", "--n", "4", "--out", str(out)).returncode == 2
    proc = run_cli("export", "--n", "2,4", "--op", "B", "--out", str(out))
    assert proc.returncode == 2
    assert run_cli("export", "--n", "4", "--op", "Q", "--out", str(out)).returncode == 2


def test_export_dense_op_above_cap_exits_1(tmp_path):
    out = tmp_path / "sd.mtx"
    proc = run_cli("export", "--n", "64", "--op", "S_D", "--out", str(out))
    assert proc.returncode == 1
    assert "error:" in proc.stderr


def test_export_sparse_op_above_cap_still_works(tmp_path):
    out = tmp_path / "b.mtx"
    proc = run_cli("export", "--n", "64", "--op", "B", "--out", str(out))
    assert proc.returncode == 0
    loaded = scipy.io.mmread(str(out))
    assert loaded.shape == (64 * 64, 2 * 64 * 63)


def test_solve_cavity_csv(tmp_path):
    out = tmp_path / "sol.csv"
    proc = run_cli(
        "solve", "--n", "8", "--bvp", "dirichlet", "--cavity", "--out", str(out)
    )
    assert proc.returncode == 0, proc.stderr
    lines = out.read_text().splitlines()
    g = make_grid(8)
    assert lines[0] == "field,i_x,i_y,x,y,value"
    assert len(lines) == 1 + g.dim_u + g.dim_v + g.dim_p
    assert len(lines) == 1 + 176


def test_solve_cavity_json():
    proc = run_cli("solve", "--n", "4", "--cavity", "--format", "json")
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["n"] == 4
    assert payload["converged"] is True
    assert payload["coupled_residual"] <= 1e-8
    assert len(payload["fields"]["u"]) == 12
    assert len(payload["fields"]["v"]) == 12
    assert len(payload["fields"]["p"]) == 16


def test_solve_at_rest_is_identically_zero():
    proc = run_cli("solve", "--n", "4", "--format", "json")
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    for name in ("u", "v", "p"):
        assert payload["fields"][name] == [0.0] * len(payload["fields"][name])


def test_solve_rejects_multiple_sizes():
    assert run_cli("solve", "--n", "4,8", "--cavity").returncode == 2


def test_solve_neumann_cavity():
    proc = run_cli(
        "solve", "--n", "4", "--bvp", "neumann", "--cavity", "--format", "json"
    )
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["bvp"] == "neumann"
    assert payload["schur_iters"] <= 2


def test_study_csv():
    proc = run_cli("study", "--n", "2,4")
    assert proc.returncode == 0
    lines = proc.stdout.splitlines()
    assert lines[0] == "n,bvp,mode,preconditioner,iterations,converged,final_rel_residual"
    assert len(lines) == 1 + 2 * 4


def test_study_json_neumann():
    proc = run_cli("study", "--n", "4", "--bvp", "neumann", "--format", "json")
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert [row["preconditioner"] for row in payload["rows"]] == [
        "none",
        "neumann-projector",
    ]
    assert all(row["converged"] for row in payload["rows"])


def test_console_script_is_installed():
    exe = shutil.which("stokes-schur")
    assert exe is not None
    proc = subprocess.run(
        [exe, "check", "--n", "2", "--format", "csv"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0].startswith("name,")
