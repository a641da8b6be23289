import numpy as np
import pytest

from h2corr import artifacts
from h2corr.errors import ArtifactError, ConfigurationError
from h2corr.holonomic.grid import GridSpec, initial_embedding


def test_csv_round_trip_keeps_full_precision(tmp_path):
    path = tmp_path / "t.csv"
    artifacts.write_csv(path, ("a", "b"), [(0.1 + 0.2, 3), (np.float64(1 / 3), True)])
    header, rows = artifacts.read_csv(path)
    assert header == ["a", "b"]
    assert float(rows[0][0]) == 0.1 + 0.2 and float(rows[1][0]) == 1 / 3


def test_grid_round_trip(tmp_path):
    g = initial_embedding(GridSpec(0.3, 11, 70, phi_multiple=7))
    artifacts.save_grid(tmp_path / "g.npz", g)
    back = artifacts.load_grid(tmp_path / "g.npz")
    assert np.array_equal(back.nodes, g.nodes) and back.symmetry == g.symmetry


def test_lock_is_exclusive(tmp_path):
    with artifacts.output_lock(tmp_path):
        with pytest.raises(ConfigurationError):
            with artifacts.output_lock(tmp_path):
                pass
    with artifacts.output_lock(tmp_path):
        pass
    assert not (tmp_path / artifacts.LOCK).exists()


def test_manifest_detects_changes(tmp_path):
    (tmp_path / "sub").mkdir()
    (tmp_path / "sub" / "a.txt").write_text("one")
    (tmp_path / "b.txt").write_text("two")
    assert artifacts.write_manifest(tmp_path) == 2
    assert artifacts.check_manifest(tmp_path)
    (tmp_path / "b.txt").write_text("changed")
    with pytest.raises(ArtifactError, match="checksum mismatch"):
        artifacts.check_manifest(tmp_path)
    (tmp_path / "sub" / "a.txt").unlink()
    with pytest.raises(ArtifactError, match="missing"):
        artifacts.check_manifest(tmp_path)


def test_missing_manifest(tmp_path):
    with pytest.raises(ArtifactError, match="h2corr build"):
        artifacts.check_manifest(tmp_path)
