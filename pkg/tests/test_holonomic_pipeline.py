from math import exp, pi

import numpy as np
import pytest

from h2corr.errors import BudgetExceededError, ConfigurationError
from h2corr.holonomic.diagnostics import embedding_diagnostics, lambda_floor, self_intersection_scan
from h2corr.holonomic.exact import ExactEngine
from h2corr.holonomic.grid import GridSpec, initial_embedding
from h2corr.holonomic.pipeline import (ConditionContext, RunSpec, choose_N, level_checks,
                                       run_holonomic)
from h2corr.holonomic.process import lin_lambda
from h2corr.metrics import hmax_and_ch
from h2corr.schedule import Schedule

SMALL = Schedule.from_list([2, 10, 10], rho0=0.3)


def small_run(mode, n_rho=141, phi_count=None):
    return run_holonomic(RunSpec(rho0=0.3, depth=1, schedule=SMALL, mode=mode, n_rho=n_rho,
                                 phi_count=phi_count, extra_samples=0))


def context(rng):
    engine = ExactEngine(rng.uniform(0.3, 1.0, 400), rng.uniform(0, 2 * pi, 400), 1)
    hmax, ch = hmax_and_ch()
    return ConditionContext(engine, hmax, ch)


class TestRuns:
    def test_explicit_schedule_is_followed(self):
        res = small_run("exact")
        assert [r.N for r in res.reports] == [2, 10, 10]
        assert res.schedule.as_list() == [2, 10, 10]
        assert len(res.level_rows) == 1

    def test_grid_and_exact_modes_converge_together(self):
        gaps = []
        for n_rho, phi_count in [(141, None), (281, 2 * 14 * 70)]:
            a, b = small_run("exact", n_rho, phi_count), small_run("grid", n_rho, phi_count)
            df_gap = np.abs(a.engine.mesh_layer(3)[1] - b.engine.layers[3].df).max(axis=(1, 2, 3))
            f_gap = np.abs(a.final_grid().nodes - b.final_grid().nodes).max()
            gaps.append((f_gap, df_gap[3:-3].max()))
        assert gaps[0][0] / gaps[1][0] >= 3.0
        assert gaps[0][1] / gaps[1][1] >= 8.0

    def test_symmetry_order_follows_schedule(self):
        assert RunSpec(depth=1, schedule=SMALL).symmetry_order() == 70
        assert RunSpec(depth=0).symmetry_order() == 7

    @pytest.mark.parametrize("kw", [dict(rho0=1.2), dict(depth=-1), dict(mode="spline"),
                                    dict(depth=2, schedule=SMALL)])
    def test_invalid_specs(self, kw):
        with pytest.raises(ConfigurationError):
            RunSpec(**kw).validate()

    def test_depth_zero_has_only_the_initial_map(self):
        res = run_holonomic(RunSpec(rho0=0.3, depth=0, n_rho=21, extra_samples=0))
        assert res.reports == [] and len(res.level_grids()) == 1

    def test_adaptive_run_reports_chosen_numbers(self):
        res = run_holonomic(RunSpec(rho0=0.3, depth=1, tau1=0.18, conditions=("LC2", "LC3"),
                                    n_rho=71))
        assert res.schedule.depth == 1
        for checks in res.checks:
            assert all(ok for _, _, ok in checks.values())


class TestChooseN:
    def test_relaxed_budget_never_needs_more_corrugations(self, rng):
        ctx = context(rng)
        tight = choose_N(ctx, 1, 1, 0.05, conditions=("LC2", "LC3"))
        ctx = context(np.random.default_rng(12345))
        loose = choose_N(ctx, 1, 1, 0.5, conditions=("LC2", "LC3"))
        assert loose <= tight

    def test_cap_raises_with_failing_conditions(self, rng):
        with pytest.raises(BudgetExceededError) as info:
            choose_N(context(rng), 1, 1, 1e-6, cap=64, conditions=("LC2", "LC3"))
        assert set(info.value.failed) <= {"LC2", "LC3"} and info.value.failed

    def test_unknown_condition(self, rng):
        with pytest.raises(ConfigurationError):
            choose_N(context(rng), 1, 1, 0.1, conditions=("LC9",))

    def test_default_constants(self):
        spec = RunSpec()
        assert spec.lam == 100
        assert Schedule(tau1=exp(-1)).tau(2) == pytest.approx(exp(-2))


class TestDiagnostics:
    def test_initial_surface_is_clean(self):
        g = initial_embedding(GridSpec(0.3, 61, 140, sector=False))
        scan = self_intersection_scan(g.full_nodes())
        assert scan.clean
        rho, phi = g.mesh_coords()
        from h2corr.holonomic.grid import f0_differential
        fr, fp = f0_differential(rho, phi)
        lam = float(np.min(lin_lambda(np.stack([fr, fp], -1))))
        assert lam == pytest.approx(2 * lambda_floor(0.3), rel=1e-12)

    def test_scan_finds_a_glued_surface(self):
        g = initial_embedding(GridSpec(0.3, 61, 140, sector=False))
        nodes = g.full_nodes().copy()
        nodes[40] = nodes[5]
        assert self_intersection_scan(nodes).collisions > 0

    def test_floor_is_half_the_initial_margin(self):
        assert lambda_floor(0.3) == pytest.approx(0.3)

    def test_desk_run_flags(self, desk_result):
        diag = embedding_diagnostics(desk_result.final_grid(), desk_result.reports)
        assert diag.alpha_ok and diag.X_ok and diag.lambda_ok and diag.scan.clean


class TestLevelChecks:
    def test_level_rows_on_desk_run(self, desk_result):
        rows = desk_result.level_rows
        assert [r["k"] for r in rows] == [1, 2]
        assert all(r["P2_ok"] for r in rows)
        # the P3 constant is measured on level 1 and frozen
        assert rows[0]["A"] == rows[1]["A"]

    def test_first_level_pullback_within_budget(self, desk_result):
        row = desk_result.level_rows[0]
        print("P1 at k=1:", row["P1"], "budget", row["P1_budget"])
        assert row["P1_ok"]

    def test_immersion_margin_kept(self, desk_result):
        assert min(r.lambda_min for r in desk_result.reports) >= lambda_floor(0.3)
