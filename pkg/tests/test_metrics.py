from math import pi

import numpy as np
import pytest
from hypothesis import given, strategies as st

from h2corr.errors import DomainError, SingularityError
from h2corr.metrics import (A_SLOPE, WAVEFRONTS, SymForm2, defect_delta, h_coords, h_metric,
                            hmax_and_ch, functional_norms, ladder_increment_coords,
                            metric_ladder, pullback_f0)

coef = st.floats(-50.0, 50.0)
radius = st.floats(0.01, 0.999)


def f0(rho, phi):
    return 2.0 * np.array([rho * np.cos(phi), rho * np.sin(phi), rho * rho / np.sqrt(2.0)])


class TestSymForm2:
    @given(coef, coef, coef, st.floats(-3, 3), st.floats(-3, 3))
    def test_evaluation_formula(self, E, F, G, x, y):
        b = SymForm2(E, F, G)
        assert b((x, y)) == pytest.approx(E * x * x + 2 * F * x * y + G * y * y, abs=1e-9)

    @given(coef, coef, coef)
    def test_norm_is_spectral_radius(self, E, F, G):
        b = SymForm2(E, F, G)
        eig = np.linalg.eigvalsh(np.array([[E, F], [F, G]]))
        assert b.norm() == pytest.approx(np.max(np.abs(eig)), rel=1e-12, abs=1e-12)

    def test_norm_matches_sampled_supremum(self, rng):
        b = SymForm2(1.0, 3.0, -2.0)
        t = np.linspace(0, 2 * pi, 20001)
        sup = np.max(np.abs(b((np.cos(t), np.sin(t)))))
        assert b.norm() == pytest.approx(sup, rel=1e-6)

    def test_matrix_round_trip(self):
        b = SymForm2(np.array([1.0, 2.0]), np.array([0.5, -1.0]), np.array([3.0, 4.0]))
        back = SymForm2.from_matrix(b.matrix())
        assert np.array_equal(back.E, b.E) and np.array_equal(back.F, b.F)


class TestWavefronts:
    def test_slope(self):
        assert A_SLOPE == pytest.approx(7 / (2 * pi))

    @pytest.mark.parametrize("i", [1, 2, 3])
    def test_kernel_and_orientation(self, i):
        ell, w, v = WAVEFRONTS.ell_i(i), WAVEFRONTS.w_i(i), WAVEFRONTS.v_i(i)
        assert ell @ w == pytest.approx(0.0, abs=1e-15)
        assert ell @ v > 0
        assert v[0] * w[1] - v[1] * w[0] > 0

    def test_squares_span_forms(self):
        assert abs(WAVEFRONTS.gram_det()) > 1e-6

    def test_cyclic_indices(self):
        assert np.array_equal(WAVEFRONTS.w_i(0), WAVEFRONTS.w_i(3))
        assert np.array_equal(WAVEFRONTS.ell_i(4), WAVEFRONTS.ell_i(1))

    @given(st.floats(0.0, 1.0), st.floats(0.0, 2 * pi), st.integers(1, 10 ** 6))
    def test_phase_frac_matches_mpmath(self, rho, phi, N):
        import mpmath
        mpmath.mp.dps = 60
        for i in (1, 2, 3):
            lr, lp = WAVEFRONTS.ell_i(i)
            exact = (mpmath.mpf(N) * mpmath.mpf(lr) * mpmath.mpf(rho)
                     + mpmath.mpf(N) * mpmath.mpf(lp) * mpmath.mpf(phi))
            ref = float(exact - mpmath.floor(exact))
            got = float(WAVEFRONTS.phase_frac(i, N, rho, phi))
            d = abs(got - ref)
            assert min(d, 1 - d) <= 1e-14

    def test_rational_phase_agrees_with_float_phase(self):
        phi = np.linspace(0, 2 * pi, 50)
        for i in (1, 2, 3):
            a = WAVEFRONTS.phase_frac_rational(i, 30, 7, 10, phi)
            b = WAVEFRONTS.phase_frac(i, 30, 0.7, phi)
            d = np.abs(a - b)
            assert np.max(np.minimum(d, 1 - d)) <= 1e-13


class TestHyperbolicMetric:
    @given(radius)
    def test_conformal_factor_identity(self, rho):
        h = h_metric(rho)
        assert h.E * (1 - rho * rho) ** 2 / 4 == pytest.approx(1.0, rel=1e-12)
        assert h.F == 0

    def test_closed_form_at_half(self):
        h = h_metric(0.5)
        assert h.E == pytest.approx(4 / 0.75 ** 2, rel=1e-15)
        assert h.G == pytest.approx(4 * 0.25 / 0.5625, rel=1e-15)

    def test_blow_up_near_boundary(self):
        assert h_metric(0.999).E > 1e6

    def test_errors(self):
        with pytest.raises(SingularityError):
            h_metric(1.0)
        with pytest.raises(DomainError):
            h_metric(0.0)


class TestCoordinates:
    def test_drho_squared(self):
        c = h_coords(SymForm2(1.0, 0.0, 0.0))
        assert (c.eta1, c.eta2, c.eta3) == (1.0, 0.0, 0.0)

    def test_dphi_squared(self):
        a = A_SLOPE
        c = h_coords(SymForm2(0.0, 0.0, 1.0))
        assert c.as_array() == pytest.approx([-1 / a ** 2, 1 / (2 * a ** 2), 1 / (2 * a ** 2)])

    @given(coef, coef, coef)
    def test_reconstruction(self, E, F, G):
        back = WAVEFRONTS.reconstruct(h_coords(SymForm2(E, F, G)))
        assert max(abs(back.E - E), abs(back.F - F), abs(back.G - G)) <= 1e-12 * (1 + abs(E) + abs(F) + abs(G))


class TestPullback:
    @pytest.mark.parametrize("rho", [0.3, 0.7])
    def test_difference_is_displayed_defect(self, rho):
        d = h_metric(rho) - pullback_f0(rho)
        q = 1 / (1 - rho * rho) ** 2
        assert d.E == pytest.approx(4 * (q - 1 - 2 * rho * rho), rel=1e-13)
        assert d.G == pytest.approx(4 * rho * rho * (q - 1), rel=1e-13)

    def test_central_difference_oracle(self):
        rho, phi, h = 0.6, 1.1, 1e-5
        fr = (f0(rho + h, phi) - f0(rho - h, phi)) / (2 * h)
        fp = (f0(rho, phi + h) - f0(rho, phi - h)) / (2 * h)
        g = pullback_f0(rho)
        assert fr @ fr == pytest.approx(g.E, abs=1e-8)
        assert fr @ fp == pytest.approx(g.F, abs=1e-8)
        assert fp @ fp == pytest.approx(g.G, abs=1e-8)

    def test_limit_at_origin(self):
        assert pullback_f0(1e-9).E == pytest.approx(4.0)


class TestLadder:
    def test_ground_rung_is_pullback(self):
        assert metric_ladder(0, 0.4) == pullback_f0(0.4)

    @given(radius)
    def test_first_increment(self, rho):
        d = metric_ladder(1, rho) - metric_ladder(0, rho)
        assert d.E == pytest.approx(12 * rho ** 4, abs=1e-14)
        assert d.G == pytest.approx(8 * rho ** 4, abs=1e-14)

    def test_monotone_approach_to_hyperbolic(self):
        gap = lambda k: float((h_metric(0.9) - metric_ladder(k, 0.9)).norm())
        assert gap(40) < gap(39)

    def test_finite_on_boundary(self):
        assert np.isfinite(metric_ladder(12, 1.0).E)

    def test_negative_index(self):
        with pytest.raises(DomainError):
            metric_ladder(-1, 0.5)

    @pytest.mark.parametrize("k,rho", [(1, 0.4), (3, 0.5), (7, 0.95)])
    def test_increment_coordinates_two_routes(self, k, rho):
        direct = h_coords(metric_ladder(k, rho) - metric_ladder(k - 1, rho)).as_array()
        closed = ladder_increment_coords(k, rho).as_array()
        assert np.max(np.abs(direct - closed)) <= 1e-12 * max(1.0, np.max(np.abs(closed)))

    def test_increment_vanishes_at_origin(self):
        assert np.all(ladder_increment_coords(2, 0.0).as_array() == 0.0)

    @given(st.integers(0, 30), radius)
    def test_increments_psd_and_in_cone(self, k, rho):
        inc = metric_ladder(k + 1, rho) - metric_ladder(k, rho)
        assert inc.is_psd(tol=1e-15)
        assert np.all(ladder_increment_coords(k + 1, rho).as_array() > 0)

    @pytest.mark.parametrize("b", [0.7, 0.9])
    def test_summability_proxy(self, b):
        rho = np.linspace(0.01, b, 200)
        for k in range(1, 51):
            inc = (metric_ladder(k, rho) - metric_ladder(k - 1, rho)).norm()
            # the increment is a difference of O(10) forms, so allow rounding of that size
            assert np.all(inc <= 4 * b ** (2 * k + 2) * (k + 2) + 1e-13)


def test_defect_in_cone_sweep():
    coords = h_coords(defect_delta(np.linspace(0.001, 1.0 - 1e-3, 1000))).as_array()
    assert np.all(coords > 0)


class TestFunctionalNorms:
    def test_sanity(self):
        hmax, ch = hmax_and_ch()
        assert hmax >= 1.0
        assert ch >= 1.0

    def test_sampling_stability(self):
        small = max(functional_norms(100_000, 0))
        large = max(functional_norms(1_000_000, 7))
        assert small == pytest.approx(large, rel=0.01)
