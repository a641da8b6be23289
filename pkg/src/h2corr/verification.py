"""The twelve acceptance checks, shared by the test suite and the ``verify`` command.

Each check returns a CriterionResult holding the measured numbers; none of
them raises on failure.
"""
from dataclasses import dataclass, field
from math import pi
import time

import numpy as np

from .analysis import (box_counting_dimension, compare_formal_holonomic,
                       corrugation_matrix_deviation, holder_exponent, weierstrass_field)
from .formal import fcp_run, normal_pattern, scaling_law_check, self_similarity_report
from .holonomic.diagnostics import embedding_diagnostics, lambda_floor
from .holonomic.grid import GridSpec, initial_embedding
from .holonomic.pipeline import TAU_CONDITIONS, RunSpec, run_holonomic
from .holonomic.process import corrugate_grid
from .metrics import WAVEFRONTS, defect_delta, ladder_increment_coords
from .schedule import DESK_RHO0, Schedule, default_tau1, desk_schedule, pattern_schedule
from .specfun import KAPPA0, SIGMA, bessel_j0, bessel_j0_inv


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    measured: dict = field(default_factory=dict)
    seconds: float = 0.0
    budget: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        parts = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{status}] {self.number:2d}. {self.title} ({self.seconds:.1f}s): {parts}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _timed(number, title, budget):
    def wrap(fn):
        def run(*args, **kw):
            start = time.perf_counter()
            passed, measured = fn(*args, **kw)
            return CriterionResult(number, title, bool(passed), measured,
                                   time.perf_counter() - start, budget)
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run
    return wrap


@_timed(1, "pullback error halves when N doubles", 60)
def pullback_rate():
    """Stage (1,1) on a finite-difference grid over rho in [0.25, 0.85], measured on [0.3, 0.8]."""
    errs = []
    for N in (64, 128, 256, 512):
        grid = initial_embedding(GridSpec(0.25, int(48 * N * 0.6) + 1, 56, rho1=0.85))
        _, data = corrugate_grid(grid, 1, 1, N)
        keep = (grid.rho_axis >= 0.3) & (grid.rho_axis <= 0.8)
        errs.append(float(data.err_field[keep].max()))
    ratios = [errs[j + 1] / errs[j] for j in range(3)]
    return all(0.3 <= r <= 0.7 for r in ratios), {"err": errs, "ratios": ratios}


def _random_stage_points(samples, seed):
    rng = np.random.default_rng(seed)
    rho = rng.uniform(0.05, 1.0, samples)
    phi = rng.uniform(0.0, 2.0 * pi, samples)
    return rho, phi


@_timed(2, "formal maps are exactly mu-isometric", 10)
def formal_exactness(samples=10_000, seed=0):
    rho, phi = _random_stage_points(samples, seed)
    sched = Schedule.from_list([10, 30, 50, 20, 70, 110, 40, 90, 130])
    pts = fcp_run(sched, rho, phi)
    dev = max(float(np.max(np.abs((p.pullback() - p.mu).matrix()))) for p in pts[1:])
    return dev <= 1e-12, {"max_abs_deviation": dev, "stages": len(pts) - 1}


@_timed(3, "defect coordinates match the closed form", 1)
def closed_form_eta(samples=2000, seed=1):
    rho, phi = _random_stage_points(samples, seed)
    pts = fcp_run(Schedule.from_list([12, 80, 500, 24, 160, 1000, 48, 320, 2000]), rho, phi)
    a2 = WAVEFRONTS.a ** 2
    worst = 0.0
    for p in pts[1:]:
        k, i = p.stage
        p4 = 4.0 * p.rho ** (2 * (k + 1))
        expect = p4 * (k + 2 - (k + 1) / a2) if i == 1 else p4 * (k + 1) / (2 * a2)
        worst = max(worst, float(np.max(np.abs(p.eta - expect))))
    return worst <= 1e-12, {"max_abs_deviation": worst}


@_timed(4, "the defect h - f0* lies in the cone", 1)
def cone_positivity(samples=1000):
    rho = np.linspace(0.001, 0.999, samples)
    coords = WAVEFRONTS.coords(defect_delta(rho)).as_array()
    return bool(np.all(coords > 0.0)), {"min_coordinate": float(coords.min())}


@_timed(5, "Bessel suite", 5)
def bessel_suite(seed=2):
    rng = np.random.default_rng(seed)
    zero = abs(bessel_j0(KAPPA0))
    alpha = rng.uniform(0.0, KAPPA0 * (1 - 1e-9), 10_000)
    trip = float(np.max(np.abs(bessel_j0_inv(bessel_j0(alpha)) - alpha)))
    u = rng.uniform(1e-15, 1.0, 10_000)
    v = rng.uniform(1e-15, 1.0, 10_000)
    holder = float(np.max(np.abs(bessel_j0_inv(u) - bessel_j0_inv(v)) / (4 * np.sqrt(np.abs(u - v)))))
    sigma = abs(bessel_j0_inv((1.0 + SIGMA) ** -0.5) - pi / 2)
    a = np.linspace(0.0, KAPPA0, 1000, endpoint=False)
    j = bessel_j0(a)
    slack = float(np.min(7 * (1 - j * j) - (1 + j * j - 2 * j * np.cos(a))))
    ok = zero <= 1e-12 and trip <= 1e-10 and holder <= 1.0 and sigma <= 1e-4 and slack >= -1e-15
    return ok, {"J0(kappa0)": zero, "roundtrip": trip, "holder_ratio": holder,
                "sigma_gap": sigma, "sublemma_slack": slack}


@_timed(6, "normal pattern is 2pi/(7L)-periodic", 5)
def pattern_periodicity(samples=1000, seed=3):
    sched = pattern_schedule()
    rng = np.random.default_rng(seed)
    shift = 2.0 * pi / (7 * sched.L)
    worst = {}
    for rho in (0.5, 0.7, 0.9):
        phi = rng.uniform(0.0, 2.0 * pi, samples)
        d = normal_pattern(sched, 1, sched.depth, rho, phi + shift) - normal_pattern(sched, 1, sched.depth, rho, phi)
        worst[f"rho={rho}"] = float(np.max(np.linalg.norm(d, axis=-1)))
    return max(worst.values()) <= 1e-10, {"L": sched.L, **worst}


@_timed(7, "scaling law at rational radii", 10)
def scaling_law(samples=1000):
    sched = pattern_schedule()
    devs = {f"n={n},m={m}": scaling_law_check(sched, n, m, samples=samples)
            for n in (2, 3) for m in (1, sched.M - 1)}
    return max(devs.values()) <= 1e-10, {"M": sched.M, **devs}


@_timed(8, "self-similarity Hausdorff bound", 60)
def self_similarity(m=7):
    sched = pattern_schedule()
    rep = self_similarity_report(sched, 1, m)
    return rep.within_bound, {"rho": rep.rho, "distance": rep.distance, "bound": rep.bound,
                              "slack": rep.slack, "samples_per_arc": rep.samples_per_arc}


@_timed(9, "holonomic L matrix approaches the theta rotation", 120)
def matrix_asymptotics(samples=4000, seed=4):
    rng = np.random.default_rng(seed)
    rho = rng.uniform(0.3, 0.8, samples)
    phi = rng.uniform(0.0, 2.0 * pi, samples)
    devs = [corrugation_matrix_deviation(N, rho, phi) for N in (64, 128, 256)]
    ratios = [devs[1] / devs[0], devs[2] / devs[1]]
    return all(0.3 <= r <= 0.7 for r in ratios), {"deviation": devs, "ratios": ratios}


def _adaptive_run(tau1, rho0=DESK_RHO0):
    spec = RunSpec(rho0=rho0, depth=1, tau1=tau1, conditions=TAU_CONDITIONS, n_rho=71)
    return run_holonomic(spec)


@_timed(10, "formal and holonomic differentials approach each other", 300)
def proximity_trend(K=(0.3, 0.8), slack=1e-9):
    tau1 = default_tau1(DESK_RHO0)
    coarse = compare_formal_holonomic(_adaptive_run(tau1), K)
    fine = compare_formal_holonomic(_adaptive_run(tau1 / 10), K)
    base_ok = coarse[0].sup_diff <= tau1 / 3 + slack
    trend_ok = all(f.sup_diff <= c.sup_diff + slack for c, f in zip(coarse, fine))
    return base_ok and trend_ok, {"tau1": tau1, "sup_diff": [r.sup_diff for r in coarse],
                                  "sup_diff_tau1/10": [r.sup_diff for r in fine]}


def desk_run(depth=2):
    return run_holonomic(RunSpec(rho0=DESK_RHO0, depth=depth, schedule=desk_schedule(depth)))


@_timed(11, "embeddedness diagnostics on the depth-2 desk run", 600)
def embeddedness(result=None):
    result = desk_run() if result is None else result
    diag = embedding_diagnostics(result.final_grid(), result.reports)
    return diag.all_ok, {"alpha_max": diag.alpha_max, "X_max": diag.X_max,
                         "lambda_min": diag.lambda_min, "lambda_floor": diag.lambda_floor,
                         "collisions": diag.scan.collisions}


@_timed(12, "calibration of the dimension and Hölder estimators", 60)
def calibration():
    t = np.linspace(0.0, 2.0 * pi, 20_000, endpoint=False)
    circle = box_counting_dimension(np.stack([np.cos(t), np.sin(t), np.zeros_like(t)], -1))
    holder = holder_exponent(weierstrass_field(0.5), base=1024)
    ok = abs(circle.dimension - 1.0) <= 0.1 and abs(holder.beta - 0.5) <= 0.05
    return ok, {"circle_dimension": circle.dimension, "holder_beta": holder.beta}


CRITERIA = (pullback_rate, formal_exactness, closed_form_eta, cone_positivity, bessel_suite,
            pattern_periodicity, scaling_law, self_similarity, matrix_asymptotics,
            proximity_trend, embeddedness, calibration)


def run_all(skip=(), desk_result=None):
    out = []
    for number, check in enumerate(CRITERIA, start=1):
        if number in skip:
            continue
        out.append(check(desk_result) if number == 11 else check())
    return out
