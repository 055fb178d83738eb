import csv
import json
import subprocess
import sys

import numpy as np
import pytest
import scipy.sparse as sp

from skeweig.cli import run
from skeweig.datasets import planted_spectrum, random_sparse_skew
from skeweig.mmio import write_matrix_market
from skeweig.oracle import dense_decompose
from skeweig.sparse import SkewSparseMatrix


@pytest.fixture
def rot2_file(tmp_path):
    path = tmp_path / "rot2.mtx"
    write_matrix_market(path, SkewSparseMatrix.from_triplets(2, [(0, 1, 2.0), (1, 0, -2.0)]))
    return str(path)


def test_rotation_text_output(rot2_file, capsys):
    assert run(["--input", rot2_file, "--k", "1"]) == 0
    out, err = capsys.readouterr()
    lines = out.strip().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("+/-2.000000000000e+00i")
    assert "converged" in err and "#Mv=2" in err


def test_json_document_schema(tmp_path, capsys):
    A = random_sparse_skew(80, 0.1, seed=50)
    path = tmp_path / "a.mtx"
    write_matrix_market(path, A)
    code = run(
        ["--input", str(path), "--k", "3", "--m", "12", "--tol", "1e-9", "--output", "json"]
    )
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) == {
        "n", "k", "m", "tol", "mode", "converged", "sigmas",
        "residuals", "mv_count", "restarts", "wall_time_s",
    }
    assert doc["n"] == 80 and doc["k"] == 3 and doc["mode"] == "as-is"
    assert doc["converged"] is True
    assert len(doc["sigmas"]) == 3 and len(doc["residuals"]) == 3
    assert doc["sigmas"] == sorted(doc["sigmas"], reverse=True)
    ref = dense_decompose(A.toarray())
    np.testing.assert_allclose(doc["sigmas"], ref.sigmas[:3], atol=1e-8 * ref.sigmas[0])


def test_trace_rows_follow_the_cycles(tmp_path, capsys):
    A = random_sparse_skew(140, 0.04, seed=51)
    path = tmp_path / "a.mtx"
    write_matrix_market(path, A)
    trace_path = tmp_path / "trace.csv"
    code = run(
        [
            "--input", str(path), "--k", "2", "--m", "8", "--tol", "1e-9",
            "--output", "json", "--trace", str(trace_path),
        ]
    )
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    with open(trace_path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["cycle", "mv_count", "theta_1", "theta_2", "residual_1", "residual_2"]
    body = rows[1:]
    assert len(body) == doc["restarts"] + 1  # one row per expansion cycle
    assert [int(r[0]) for r in body] == list(range(len(body)))
    assert int(body[-1][1]) == doc["mv_count"]
    theta1 = np.array([float(r[2]) for r in body])
    assert np.all(np.diff(theta1) >= -1e-12 * theta1[-1])


def test_block_embed_mode(tmp_path, capsys):
    path = tmp_path / "rect.mtx"
    write_matrix_market(path, sp.csr_array(np.diag([3.0, 2.0, 1.0])))
    code = run(
        ["--input", str(path), "--mode", "block-embed", "--k", "2",
         "--tol", "1e-10", "--output", "json"]
    )
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["n"] == 6
    np.testing.assert_allclose(doc["sigmas"], [3.0, 2.0], atol=1e-10)


def test_symmetrize_mode(tmp_path, capsys):
    rng = np.random.default_rng(52)
    M = rng.standard_normal((30, 30))
    path = tmp_path / "gen.mtx"
    write_matrix_market(path, sp.csr_array(M))
    code = run(
        ["--input", str(path), "--mode", "symmetrize", "--k", "2",
         "--tol", "1e-10", "--output", "json"]
    )
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    ref = dense_decompose((M - M.T) / 2)
    np.testing.assert_allclose(doc["sigmas"], ref.sigmas[:2], atol=1e-9 * ref.sigmas[0])


def test_singular_input_converges_with_and_without_purge(tmp_path, capsys):
    A, _ = planted_spectrum([3.0, 1.0], n=7, seed=53)
    path = tmp_path / "sing.mtx"
    write_matrix_market(path, A)
    # the default start sees the null space but the solver purges it itself
    assert run(["--input", str(path), "--k", "2", "--tol", "1e-10"]) == 0
    capsys.readouterr()
    # asking for a pre-purged start up front reaches the same answer
    code = run(
        ["--input", str(path), "--k", "2", "--tol", "1e-10", "--start", "purge-null",
         "--output", "json"]
    )
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    np.testing.assert_allclose(doc["sigmas"], [3.0, 1.0], atol=1e-12)


def test_start_vector_from_file(tmp_path, capsys):
    A = random_sparse_skew(40, 0.15, seed=54)
    path = tmp_path / "a.mtx"
    write_matrix_market(path, A)
    qpath = tmp_path / "q1.txt"
    np.savetxt(qpath, np.random.default_rng(55).standard_normal(40))
    assert run(["--input", str(path), "--k", "1", "--start", f"file:{qpath}"]) == 0
    capsys.readouterr()
    # wrong length is an input error, not a crash
    np.savetxt(qpath, np.ones(7))
    assert run(["--input", str(path), "--k", "1", "--start", f"file:{qpath}"]) == 1


def test_usage_errors(rot2_file, capsys):
    assert run(["--input", rot2_file, "--k", "40", "--m", "30"]) == 64
    assert run(["--input", rot2_file, "--k", "0"]) == 64
    assert run(["--input", rot2_file, "--tol", "-1"]) == 64
    assert run(["--input", rot2_file, "--start", "bogus"]) == 64
    assert run(["--mode", "as-is"]) == 64  # --input is required
    capsys.readouterr()


def test_input_errors(tmp_path, capsys):
    assert run(["--input", str(tmp_path / "missing.mtx"), "--k", "1"]) == 1
    bad = tmp_path / "bad.mtx"
    bad.write_text("%%MatrixMarket matrix coordinate real general\nnot a header\n")
    assert run(["--input", str(bad), "--k", "1"]) == 1
    # as-is mode refuses a matrix that is not skew-symmetric
    notskew = tmp_path / "sym.mtx"
    write_matrix_market(notskew, sp.csr_array(np.eye(3)))
    assert run(["--input", str(notskew), "--k", "1"]) == 1
    capsys.readouterr()


def test_nonconvergence_exit_code(tmp_path, capsys):
    A = random_sparse_skew(200, 0.03, seed=56)
    path = tmp_path / "a.mtx"
    write_matrix_market(path, A)
    code = run(
        ["--input", str(path), "--k", "3", "--m", "7", "--tol", "1e-14",
         "--max-restarts", "1", "--output", "json"]
    )
    assert code == 2
    doc = json.loads(capsys.readouterr().out)
    assert doc["converged"] is False
    assert len(doc["sigmas"]) == 3  # best-effort results are still emitted


def test_console_script_smoke(rot2_file):
    proc = subprocess.run(
        [sys.executable, "-m", "skeweig.cli", "--input", rot2_file, "--k", "1"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("+/-2.000000000000e+00i")
