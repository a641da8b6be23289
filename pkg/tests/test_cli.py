import subprocess
import sys

import numpy as np
import pytest

from h2corr import artifacts
from h2corr.cli import EXIT_CONFIG, EXIT_OK, EXIT_VERIFY, main

SMALL = """rho0 = 0.3
depth = 1
schedule.1.1 = 2
schedule.1.2 = 10
schedule.1.3 = 10
grid.rho = 41
formal.samples = 64
formal.rho = 0.5, 0.7
"""


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL)
    return path


def run(*argv):
    return main([*map(str, argv), "-q"])


def test_build_then_export(tmp_path, small_cfg):
    out = tmp_path / "out"
    assert run("build", "--config", small_cfg, "--outdir", out) == EXIT_OK
    for name in ("config.txt", "reports.csv", "conditions.csv", "levels.csv", "schedule.csv",
                 "mesh_k0.obj", "mesh_k1.obj", "stages/stage_0_0.npz", "stages/stage_1_3.npz",
                 artifacts.MANIFEST):
        assert (out / name).exists(), name
    header, rows = artifacts.read_csv(out / "reports.csv")
    assert header[:3] == ["k", "i", "N"] and len(rows) == 3
    assert run("export", "--outdir", out) == EXIT_OK
    assert len(list((out / "export").glob("stage_*.obj"))) == 4
    assert not (out / artifacts.LOCK).exists()


def test_depth_zero_builds_only_the_initial_mesh(tmp_path, small_cfg):
    out = tmp_path / "out"
    assert run("build", "--config", small_cfg, "--outdir", out, "--depth", 0) == EXIT_OK
    assert sorted(p.name for p in out.glob("mesh_k*.obj")) == ["mesh_k0.obj"]
    assert len(artifacts.read_csv(out / "reports.csv")[1]) == 0


def test_invalid_radius_creates_nothing(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("rho0 = 1.5\n")
    out = tmp_path / "never"
    assert run("build", "--config", cfg, "--outdir", out) == EXIT_CONFIG
    assert not out.exists()


def test_tampered_mesh_fails_export(tmp_path, small_cfg):
    out = tmp_path / "out"
    run("build", "--config", small_cfg, "--outdir", out)
    with open(out / "mesh_k1.obj", "a") as fh:
        fh.write("v 0 0 0\n")
    assert run("export", "--outdir", out) == EXIT_VERIFY


def test_export_without_build(tmp_path):
    assert run("export", "--outdir", tmp_path / "empty") == EXIT_VERIFY


def test_locked_directory(tmp_path, small_cfg):
    out = tmp_path / "out"
    out.mkdir()
    (out / artifacts.LOCK).write_text("123")
    assert run("build", "--config", small_cfg, "--outdir", out) == EXIT_CONFIG


def test_identical_config_gives_identical_csvs(tmp_path, small_cfg):
    a, b = tmp_path / "a", tmp_path / "b"
    run("build", "--config", small_cfg, "--outdir", a)
    run("build", "--config", small_cfg, "--outdir", b)
    for name in ("reports.csv", "conditions.csv", "levels.csv", "schedule.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_formal_dumps(tmp_path, small_cfg):
    out = tmp_path / "out"
    assert run("formal", "--config", small_cfg, "--outdir", out) == EXIT_OK
    fdir = out / "formal"
    for name in ("nu_rho0.5.csv", "normal_rho0.7.csv", "arc_rho0.7.csv", "chart_rho0.5.csv",
                 "self_similarity.csv", "scaling.csv"):
        assert (fdir / name).exists(), name
    _, rows = artifacts.read_csv(fdir / "scaling.csv")
    assert max(float(r[2]) for r in rows) <= 1e-10
    _, rows = artifacts.read_csv(fdir / "self_similarity.csv")
    assert rows[0][8] == "True"


def test_formal_depth_zero_dumps_constant_pattern(tmp_path, small_cfg):
    out = tmp_path / "out"
    assert run("formal", "--config", small_cfg, "--outdir", out, "--depth", 0) == EXIT_OK
    _, rows = artifacts.read_csv(out / "formal" / "nu_rho0.5.csv")
    vecs = np.array([[float(v) for v in r[2:5]] for r in rows])
    assert np.array_equal(vecs, np.tile([0.0, 0.0, 1.0], (len(rows), 1)))


def test_compare_table(tmp_path, small_cfg):
    out = tmp_path / "out"
    assert run("compare", "--config", small_cfg, "--outdir", out) == EXIT_OK
    header, rows = artifacts.read_csv(out / "compare" / "comparison.csv")
    assert header == ["k", "i", "N", "sup_diff", "K_lo", "K_hi", "C"] and len(rows) == 3


def test_module_entry_point_help():
    proc = subprocess.run([sys.executable, "-m", "h2corr", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for name in ("build", "formal", "compare", "verify", "export"):
        assert name in proc.stdout


@pytest.mark.slow
def test_verify_report(tmp_path, small_cfg, capsys):
    out = tmp_path / "out"
    run("build", "--config", small_cfg, "--outdir", out)
    code = run("verify", "--outdir", out)
    report = (out / "verify" / "report.txt").read_text()
    print(report)
    assert "checksums verified" in report
    assert report.count("[PASS]") + report.count("[FAIL]") == 12
    assert code == (EXIT_OK if "[FAIL]" not in report else EXIT_VERIFY)
