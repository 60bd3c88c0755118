"""CLI surface: commands, file formats, exit codes, determinism."""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from kpzstat import cli


def run_cli(args, tmp_path=None):
    return cli.main(args)


def test_analytic_fp_norm_value(tmp_path):
    out = tmp_path / "t.csv"
    rc = run_cli(["analytic", "--formula", "fp_norm", "--u-tilde", "1", "--v-tilde", "0", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# kpzstat v")
    assert "config_sha256=" in lines[0]
    assert lines[1] == "fp_norm"
    assert float(lines[2]) == pytest.approx(0.427584, abs=5e-7)


def test_analytic_pdf_symmetric_csv(tmp_path):
    out = tmp_path / "pdf.csv"
    rc = run_cli(["analytic", "--formula", "pdf_Y", "--u", "-0.5", "--v", "-0.5", "--L", "1", "--grid", "-3:3:601", "--out", str(out)])
    assert rc == 0
    rows = np.loadtxt(str(out), delimiter=",", skiprows=2)
    assert rows.shape == (601, 2)
    # symmetry of the tabulated column
    assert np.allclose(rows[:, 1], rows[::-1, 1], rtol=1e-10)


def test_analytic_mean_profile_parabola(tmp_path):
    out = tmp_path / "mp.csv"
    rc = run_cli(["analytic", "--formula", "mean_profile", "--u", "-0.5", "--v", "-0.5", "--L", "1", "--grid", "0:1:101", "--out", str(out)])
    assert rc == 0
    rows = np.loadtxt(str(out), delimiter=",", skiprows=2)
    x = rows[:, 0]
    assert np.allclose(rows[:, 1], -x * (1 - x) / 2.0, atol=1e-12)


def test_analytic_unsupported_exit_code(tmp_path):
    rc = run_cli(["analytic", "--formula", "norm_Z", "--u", "0.4", "--v", "0.3", "--L", "1", "--out", str(tmp_path / "x.csv")])
    assert rc == 2
    rc = run_cli(["analytic", "--formula", "does_not_exist", "--out", str(tmp_path / "y.csv")])
    assert rc == 2


def test_sample_is_report(tmp_path):
    rep = tmp_path / "rep.json"
    rc = run_cli([
        "sample", "--measure", "interval", "--u", "-0.2", "--v", "-0.8", "--L", "1",
        "--n", "20000", "--n-steps", "256", "--seed", "11", "--base-drift", "0.8",
        "--observable", "one", "--unnormalized", "--report-out", str(rep),
    ])
    assert rc == 0
    data = json.loads(rep.read_text())
    assert data["value"] == pytest.approx(1.426117, abs=3 * data["std_err"])
    assert data["method"] == "is"
    assert data["seed"] == 11


def test_sample_requires_seed(tmp_path):
    rc = run_cli(["sample", "--measure", "interval", "--u", "-0.2", "--v", "-0.8", "--L", "1", "--n", "1000"])
    assert rc == 2


def test_sample_ess_collapse_exit_code(tmp_path):
    rc = run_cli([
        "sample", "--measure", "interval", "--u", "6", "--v", "6", "--L", "1",
        "--n", "2000", "--n-steps", "64", "--seed", "1", "--observable", "one",
        "--report-out", str(tmp_path / "r.json"),
    ])
    assert rc == 3


def test_sample_histogram_and_ensemble(tmp_path):
    hist = tmp_path / "h.csv"
    ens = tmp_path / "e.bin"
    rep = tmp_path / "r.json"
    rc = run_cli([
        "sample", "--measure", "hy-high-density", "--u", "0.5", "--v", "-1", "--x-max", "20",
        "--n", "2000", "--n-steps", "640", "--seed", "3", "--histogram", "endpoint",
        "--out", str(hist), "--report-out", str(rep), "--ensemble-out", str(ens),
    ])
    assert rc == 0
    data = json.loads(rep.read_text())
    assert data["value"] == pytest.approx(1.0, abs=5 * data["std_err"])  # drift at infinity ~ -v
    rows = np.loadtxt(str(hist), delimiter=",", skiprows=2)
    assert rows.shape[1] == 4  # bin_left, bin_right, density, stderr
    from kpzstat import paths as pth

    with open(ens, "rb") as fh:
        loaded, seed = pth.read_ensemble(fh)
    assert seed == 3
    assert loaded.values.shape == (1024, 641)


def test_laplace_grid_and_strip_error(tmp_path):
    out = tmp_path / "l.csv"
    rc = run_cli(["laplace", "--kind", "limit", "--u", "1", "--v", "1", "--L", "1", "--grid", "-1:1:5", "--out", str(out)])
    assert rc == 0
    rows = np.loadtxt(str(out), delimiter=",", skiprows=2)
    c1 = rows[np.isclose(rows[:, 0], 1.0)]
    assert c1[0, 1] == pytest.approx(math.pi**2 / 4, rel=1e-10)
    rc = run_cli(["laplace", "--kind", "finite", "--u", "1", "--v", "1", "--L", "1", "--c", "5.0", "--out", str(out)])
    assert rc == 2


def test_laplace_j_zero_row(tmp_path):
    out = tmp_path / "j.csv"
    rc = run_cli(["laplace", "--kind", "J", "--u", "1", "--v", "1", "--L", "1", "--points", "0.5", "--s", "0", "--out", str(out)])
    assert rc == 0
    rows = out.read_text().splitlines()
    assert rows[2].startswith("0.0,1.0,")


def test_config_file_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("formula = fp_norm\nu-tilde = 1\nv-tilde = 0\n# comment\n")
    out = tmp_path / "o.csv"
    rc = run_cli(["analytic", "--formula", "fp_norm", "--config", str(cfg), "--out", str(out)])
    assert rc == 0
    assert float(out.read_text().splitlines()[2]) == pytest.approx(0.427584, abs=5e-7)


def test_verify_only_subset_and_determinism(tmp_path):
    out1, out2 = tmp_path / "v1.json", tmp_path / "v2.json"
    args = ["verify", "--quick", "--only", "quad_gaussian", "--only", "laplace_j_zero", "--seed", "7", "--out"]
    assert run_cli(args + [str(out1)]) == 0
    assert run_cli(args + [str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    data = json.loads(out1.read_text())
    assert data["all_passed"] is True
    assert [c["name"] for c in data["checks"]] == ["quad_gaussian", "laplace_j_zero"]


def test_verify_unknown_check(tmp_path):
    rc = run_cli(["verify", "--quick", "--only", "nope", "--out", str(tmp_path / "v.json")])
    assert rc == 2


def test_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "kpzstat.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "kpzstat" in proc.stdout
