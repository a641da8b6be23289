"""Cross-checks between the formal and holonomic sides, plus the sphere,
box-counting and Hölder tools used on run outputs."""
from dataclasses import dataclass
from math import pi

import numpy as np

from .errors import DomainError, ScheduleMismatchError
from .formal import fcp_run, frame_of, rotation_L
from .holonomic.exact import ExactEngine
from .holonomic.process import lin_norm
from .sphere import SpherePointSet, chord_to_angle, hausdorff_sphere

__all__ = ["SpherePointSet", "hausdorff_sphere", "chord_to_angle", "ComparisonRow",
           "compare_formal_holonomic", "telescoped_constants", "BoxCount",
           "box_counting_dimension", "limit_set_sample", "HolderEstimate",
           "holder_exponent", "holder_estimate", "corrugation_matrix_deviation",
           "weierstrass_field"]


# formal versus holonomic -----------------------------------------------------
@dataclass(frozen=True)
class ComparisonRow:
    k: int
    i: int
    sup_diff: float
    K: tuple


def _sample_points(engine):
    if hasattr(engine, "phi"):
        return np.ravel(engine.rho), np.ravel(engine.phi)
    rho, phi = engine.field_grid(0).mesh_coords()
    return rho.ravel(), phi.ravel()


def compare_formal_holonomic(result, K=(0.3, 0.8), schedule=None):
    """sup over rho in K of |Phi_{k,i} - df_{k,i}| for every completed stage.

    ``result`` is a RunResult.  When ``schedule`` is given it must match the
    numbers the run actually used.
    """
    run_schedule = result.schedule
    if schedule is not None and schedule.as_list()[:len(run_schedule.as_list())] != run_schedule.as_list():
        raise ScheduleMismatchError("formal schedule differs from the holonomic run")
    lo, hi = K
    if not lo < hi:
        raise DomainError("K must be a nonempty rho interval")
    engine = result.engine
    rho, phi = _sample_points(engine)
    keep = (rho >= lo) & (rho <= hi)
    if not keep.any():
        raise DomainError("no run samples fall inside K")
    pts = fcp_run(run_schedule, rho[keep], phi[keep])
    rows = []
    for s, (k, i, _) in enumerate(run_schedule.stages(), start=1):
        df = engine.layers[s].df.reshape(-1, 3, 2)[keep]
        rows.append(ComparisonRow(k, i, float(np.max(lin_norm(pts[s].Phi - df))), (lo, hi)))
    return rows


def telescoped_constants(rows):
    """C_{k,i} = sup_diff_{k,i} / sup_diff_{k,i-1}^(1/2), measured along the run."""
    out = []
    for prev, cur in zip(rows, rows[1:]):
        out.append(cur.sup_diff / np.sqrt(prev.sup_diff) if prev.sup_diff > 0 else float("inf"))
    return out


# box counting ----------------------------------------------------------------
@dataclass(frozen=True)
class BoxCount:
    dimension: float
    stderr: float
    sizes: tuple
    counts: tuple


def _occupied(points, size, origin):
    keys = np.floor((points - origin) / size).astype(np.int64)
    return np.unique(keys, axis=0).shape[0]


def box_counting_dimension(points, scales=3):
    """Slope of log(box count) against log(1/size) over ``scales`` dyadic sizes.

    The finest size is the smallest dyadic fraction of the bounding box that
    still holds at least two points per occupied box on average; coarser sizes
    double from there, and the coarsest must average at least ten.
    """
    pts = np.asarray(points, dtype=float)
    pts = pts.reshape(-1, pts.shape[-1])
    n = pts.shape[0]
    if n < 20 * scales:
        raise DomainError("too few points for box counting")
    origin = pts.min(axis=0)
    extent = float(np.max(pts.max(axis=0) - origin))
    if extent <= 0.0:
        raise DomainError("degenerate point set")
    q = 1
    while n / _occupied(pts, extent / 2 ** (q + 1), origin) >= 2.0 and q < 60:
        q += 1
    while q - scales + 1 > 0 and n / _occupied(pts, extent / 2 ** (q - scales + 1), origin) < 10.0:
        q -= 1
    qs = np.arange(q - scales + 1, q + 1)
    if qs[0] < 0:
        raise DomainError("point set too sparse for the requested scales")
    sizes = extent / 2.0 ** qs
    counts = np.array([_occupied(pts, s, origin) for s in sizes], dtype=float)
    x = np.log(1.0 / sizes)
    y = np.log(counts)
    A = np.stack([x, np.ones_like(x)], -1)
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    dof = max(len(x) - 2, 1)
    resid = y - A @ coef
    sigma2 = float(resid @ resid) / dof
    stderr = float(np.sqrt(sigma2 / np.sum((x - x.mean()) ** 2)))
    return BoxCount(float(coef[0]), stderr, tuple(sizes), tuple(int(c) for c in counts))


def limit_set_sample(result):
    """Image of the outer column rho = 1 under the last map, with its box count."""
    grid = result.final_grid()
    nodes = grid.full_nodes()
    if abs(float(grid.rho_axis[-1]) - 1.0) > 1e-12:
        raise DomainError("the run grid does not reach rho = 1")
    curve = nodes[-1]
    return curve, box_counting_dimension(curve)


# Hölder exponent -------------------------------------------------------------
@dataclass(frozen=True)
class HolderEstimate:
    beta: float
    residual: float
    gaps: tuple
    increments: tuple


def holder_exponent(field, window=(0.95, 1.0), gaps=20, phi=None, base=64, seed=0):
    """Log-log slope of the RMS radial increment |f(rho + d, phi) - f(rho, phi)|.

    ``field(rho, phi)`` returns points (..., dim).  Gaps are log-spaced from
    1e-4 of the window width up to half of it; base radii are drawn uniformly
    so that both ends of every pair stay in the window.
    """
    lo, hi = window
    width = hi - lo
    rng = np.random.default_rng(seed)
    phi = np.array([0.0]) if phi is None else np.atleast_1d(np.asarray(phi, dtype=float))
    deltas = np.logspace(np.log10(1e-4 * width), np.log10(0.5 * width), gaps)
    incs = []
    for d in deltas:
        r1 = lo + rng.uniform(0.0, width - d, base)
        r1, ph = np.meshgrid(r1, phi, indexing="ij")
        diff = np.asarray(field(r1 + d, ph)) - np.asarray(field(r1, ph))
        diff = diff.reshape(r1.shape + (-1,))
        incs.append(float(np.sqrt(np.mean(np.sum(diff * diff, axis=-1)))))
    x = np.log(deltas)
    y = np.log(incs)
    slope, icpt = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + icpt)) ** 2)))
    return HolderEstimate(float(slope), resid, tuple(deltas), tuple(incs))


def holder_estimate(result, window=(0.95, 1.0), gaps=20, phi_count=8, base=16, seed=0):
    """Radial Hölder trend of the last map of a run, replayed exactly at fresh points."""
    stages = result.schedule.stages()

    def field(rho, phi):
        engine = ExactEngine(rho, phi, len(stages))
        for stage in stages:
            engine.step(*stage)
        return engine.current().f.reshape(np.shape(rho) + (3,))

    phi = np.linspace(0.0, 2.0 * pi, phi_count, endpoint=False)
    return holder_exponent(field, window, gaps, phi, base, seed)


# corrugation matrices --------------------------------------------------------
def corrugation_matrix_deviation(N, rho, phi):
    """Frobenius distance between the holonomic L_{1,1} and the rotation by theta.

    The holonomic matrix is F_prev^T F_half, where F_prev is the frame of df0
    and F_half the frame of df_{1,1}, both for direction 1.
    """
    engine = ExactEngine(rho, phi, 1)
    data = engine.step(1, 1, N)
    prev = data.frame_prev.matrix()
    half = frame_of(data.df, 1)
    hol = np.swapaxes(prev, -1, -2) @ half
    return float(np.max(np.linalg.norm(hol - rotation_L(data.theta), axis=(-2, -1))))


def weierstrass_field(beta=0.5, base=1.5, seed=0, low=-30, high=46):
    """Scale-free random-phase Weierstrass-Mandelbrot sum, beta-Hölder in rho.

    Frequencies run over base^n for n covering 2^low .. 2^high, which puts
    the gap range of holder_exponent well inside the self-similar regime.
    """
    scale = np.log(2.0) / np.log(base)
    n = np.arange(int(low * scale), int(high * scale))
    phase = np.random.default_rng(seed).uniform(0.0, 2.0 * pi, n.size)
    amp = base ** (-beta * n)
    freq = base ** n

    def field(rho, phi):
        r = np.asarray(rho, dtype=float)[..., None]
        return np.sum(amp * (np.cos(phase) - np.cos(freq * r + phase)), -1)[..., None]

    return field
