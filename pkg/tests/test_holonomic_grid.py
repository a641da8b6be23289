from math import pi, sqrt

import numpy as np
import pytest

from h2corr.errors import ConfigurationError, ResolutionError
from h2corr.holonomic.grid import (FieldGrid, GridSpec, differentiate, f0_differential,
                                   initial_embedding, pullback_field, rotation_z, write_obj)
from h2corr.metrics import pullback_f0


def full_grid(n_rho=41, phi_count=70, rho0=0.2, rho1=1.0):
    return initial_embedding(GridSpec(rho0, n_rho, phi_count, rho1, 7, sector=False))


class TestInitialEmbedding:
    def test_outer_point(self):
        g = full_grid()
        assert np.allclose(g.nodes[-1, 0], [2.0, 0.0, sqrt(2.0)], atol=1e-15)

    def test_columns_related_by_rotation(self):
        g = full_grid()
        rot = rotation_z(2 * pi / g.phi_count)
        for j in (0, 5, 69):
            assert np.allclose(g.column(j) @ rot.T, g.column(j + 1), atol=1e-12)

    def test_height_is_quadratic_in_plane_radius(self):
        n = full_grid().nodes
        assert np.allclose(n[..., 2], sqrt(2) / 2 * (n[..., 0] ** 2 + n[..., 1] ** 2) / 2, atol=1e-14)

    def test_sector_storage_matches_full_grid(self):
        full = full_grid()
        sector = initial_embedding(GridSpec(0.2, 41, 70, 1.0, 7, sector=True))
        assert sector.stored_columns == 10
        assert np.allclose(sector.full_nodes(), full.nodes, atol=1e-14)

    @pytest.mark.parametrize("count", [0, 71, 100])
    def test_angular_count_must_match_symmetry(self, count):
        with pytest.raises(ConfigurationError):
            initial_embedding(GridSpec(0.2, 41, count, phi_multiple=7))

    def test_rejects_non_finite_nodes(self):
        with pytest.raises(ConfigurationError):
            FieldGrid(np.full((5, 5, 3), np.nan), np.linspace(0.1, 1, 5), 5)


class TestDifferentiate:
    def error_on_f0(self, n_rho, phi_count):
        g = full_grid(n_rho, phi_count)
        df = differentiate(g)
        rho, phi = g.mesh_coords()
        fr, fp = f0_differential(rho, phi)
        # away from the one-sided ends, where the stencil is second order
        return max(np.max(np.abs(df.d_rho[2:-2] - fr[2:-2])), np.max(np.abs(df.d_phi - fp)))

    def test_fourth_order_convergence_on_f0(self):
        # f0 is quadratic in rho, so only the angular error is visible
        coarse = self.error_on_f0(41, 70)
        fine = self.error_on_f0(41, 140)
        assert coarse / fine == pytest.approx(16.0, rel=0.1)

    def test_constant_field(self):
        g = full_grid()
        const = g.with_nodes(np.ones_like(g.nodes), (0, 0), ())
        df = differentiate(const)
        assert np.max(np.abs(df.d_rho)) == 0.0 and np.max(np.abs(df.d_phi)) == 0.0

    def test_affine_radial_field(self):
        g = full_grid()
        rho, _ = g.mesh_coords()
        A, b = np.array([1.5, -2.0, 0.25]), np.array([0.1, 0.2, 0.3])
        aff = g.with_nodes(rho[..., None] * A + b, (0, 0), ())
        df = differentiate(aff)
        assert np.allclose(df.d_rho, A, atol=1e-12)
        assert np.allclose(df.d_phi, 0.0, atol=1e-12)

    def test_under_resolved_layer_is_named(self):
        g = full_grid()
        with pytest.raises(ResolutionError) as info:
            differentiate(g, extra_layers=[(1, 2, 500)])
        assert info.value.layer == (1, 2)


class TestPullbackField:
    def test_matches_closed_form_on_f0(self):
        g = full_grid(81, 700)
        rho, _ = g.mesh_coords()
        pull = pullback_field(g)
        ref = pullback_f0(rho)
        assert np.max(np.abs(pull.E - ref.E)) <= 1e-10
        assert np.max(np.abs(pull.G - ref.G)) <= 1e-6

    def test_flat_plane_gives_polar_euclidean_metric(self):
        g = full_grid(41, 700)
        rho, phi = g.mesh_coords()
        plane = g.with_nodes(np.stack([rho * np.cos(phi), rho * np.sin(phi), 0 * rho], -1), (0, 0), ())
        pull = pullback_field(plane)
        assert np.allclose(pull.E, 1.0, atol=1e-12)
        assert np.allclose(pull.F, 0.0, atol=1e-12)
        assert np.allclose(pull.G, rho * rho, atol=1e-6)


def test_obj_export_counts(tmp_path):
    g = full_grid(5, 14)
    path = tmp_path / "m.obj"
    write_obj(path, g)
    lines = path.read_text().splitlines()
    assert sum(l.startswith("v ") for l in lines) == 5 * 14
    assert sum(l.startswith("f ") for l in lines) == 2 * 4 * 14
