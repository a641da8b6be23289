import numpy as np
import pytest

from h2corr.errors import ConfigurationError, SingularityError
from h2corr.holonomic.exact import ExactEngine, exact_run, f0_jet
from h2corr.holonomic.grid import f0_differential, f0_points
from h2corr.holonomic.process import pullback_of_matrix
from h2corr.metrics import metric_ladder, pullback_f0


@pytest.fixture
def points(rng):
    return rng.uniform(0.3, 0.9, 64), rng.uniform(0.0, 2 * np.pi, 64)


def test_initial_layer_is_closed_form(points):
    rho, phi = points
    engine = ExactEngine(rho, phi, 1)
    layer = engine.current()
    fr, fp = f0_differential(rho, phi)
    assert np.allclose(layer.f, f0_points(rho, phi), atol=1e-14)
    assert np.allclose(layer.df[..., 0], fr, atol=1e-14)
    assert np.allclose(layer.df[..., 1], fp, atol=1e-14)


def test_pullback_converges_at_rate_one_over_N(points):
    rho, phi = points
    errs = []
    for N in (200, 400, 800):
        _, (data,) = exact_run(rho, phi, [(1, 1, N)])
        errs.append(data.report.err)
    assert 0.3 <= errs[1] / errs[0] <= 0.7
    assert 0.3 <= errs[2] / errs[1] <= 0.7


def test_zero_defect_is_a_singularity_for_exact_differentials(points):
    rho, phi = points
    engine = ExactEngine(rho, phi, 1)
    # the ground rung has no defect towards itself
    with pytest.raises(SingularityError):
        engine.step(0, 1, 50)


def test_engine_refuses_extra_steps(points):
    rho, phi = points
    engine = ExactEngine(rho, phi, 1)
    engine.step(1, 1, 20)
    with pytest.raises(ConfigurationError):
        engine.step(1, 2, 20)


def test_chunking_does_not_change_results(points):
    rho, phi = points
    a, _ = exact_run(rho, phi, [(1, 1, 30), (1, 2, 50)])
    b, _ = exact_run(rho, phi, [(1, 1, 30), (1, 2, 50)], chunk=7)
    assert np.array_equal(a[-1].f, b[-1].f)


def test_sweep_approaches_first_rung(points):
    rho, phi = points
    layers, datas = exact_run(rho, phi, [(1, 1, 400), (1, 2, 4000), (1, 3, 40000)])
    pull = pullback_of_matrix(layers[-1].df)
    start = float(np.max((metric_ladder(1, rho) - pullback_f0(rho)).norm()))
    end = float(np.max((metric_ladder(1, rho) - pull).norm()))
    assert end < 0.2 * start
