import numpy as np
import pytest
from hypothesis import given, strategies as st

from h2corr import jets
from h2corr.jets import Jet, mono_index, n_coeffs
from h2corr.specfun import bessel_j0, bessel_j1


def variable(rho, phi, order):
    return Jet.affine(rho, 1.0, 0.0, order), Jet.affine(phi, 0.0, 1.0, order)


def test_coefficient_count():
    assert n_coeffs(0) == 1 and n_coeffs(2) == 6
    assert len({mono_index(p, q) for p in range(4) for q in range(4 - p)}) == n_coeffs(3)


@given(st.floats(0.2, 2.0), st.floats(-1.0, 1.0))
def test_product_and_quotient_derivatives(r, p):
    x, y = variable(r, p, 3)
    f = (x * x * y + 3.0) / (x + 1.0)
    assert f.value == pytest.approx((r * r * p + 3) / (r + 1))
    d_r = (2 * r * p * (r + 1) - (r * r * p + 3)) / (r + 1) ** 2
    assert f.d_rho().value == pytest.approx(d_r, rel=1e-12, abs=1e-12)
    assert f.d_phi().value == pytest.approx(r * r / (r + 1), rel=1e-12)


def test_second_derivative_of_square_root():
    x, _ = variable(0.7, 0.0, 3)
    s = jets.sqrt(x)
    assert s.d_rho().d_rho().value == pytest.approx(-0.25 * 0.7 ** -1.5, rel=1e-12)


@given(st.floats(0.05, 0.99))
def test_inverse_bessel_jet_derivative(y):
    alpha = jets.j0inv(Jet.affine(y, 1.0, 0.0, 2))
    a0 = float(alpha.value)
    assert bessel_j0(a0) == pytest.approx(y, abs=1e-12)
    assert alpha.d_rho().value == pytest.approx(-1.0 / bessel_j1(a0), rel=1e-9)


@given(st.floats(0.0, 2.3), st.floats(-3.0, 3.0))
def test_loop_jet_differentiates_to_integrand(alpha, x):
    c, s = jets.loop_periodic(Jet.constant(alpha, 2), Jet.affine(x, 1.0, 0.0, 2))
    assert c.d_rho().value == pytest.approx(np.cos(alpha * np.cos(2 * np.pi * x)) - bessel_j0(alpha),
                                            abs=1e-11)
    assert s.d_rho().value == pytest.approx(np.sin(alpha * np.cos(2 * np.pi * x)), abs=1e-11)


def test_truncate_keeps_low_order_part():
    x, y = variable(0.4, 0.1, 4)
    f = x * y * x
    g = f.truncate(2)
    assert g.order == 2
    assert np.allclose(g.c, f.c[..., :n_coeffs(2)])
