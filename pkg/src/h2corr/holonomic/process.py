"""One step of the corrugation process, pointwise and on grids.

The pointwise kernel works on 3-vectors stored as tuples of components, each
component being either a numpy array (grid mode) or a Jet (exact mode).
"""
from dataclasses import dataclass
from math import pi

import numpy as np

from .. import jets
from ..errors import ConeViolationError, ImmersionLossError, SingularityError
from ..metrics import WAVEFRONTS, SymForm2, metric_ladder
from .grid import FieldGrid, check_resolution, differentiate, pullback_of

ETA_TOL = 1e-12


# small vector helpers on component tuples ---------------------------------
def vdot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def vcross(a, b):
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


def vscale(a, s):
    return (a[0] * s, a[1] * s, a[2] * s)


def vadd(a, b):
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def vcomb(c1, a, c2, b):
    return (a[0] * c1 + b[0] * c2, a[1] * c1 + b[1] * c2, a[2] * c1 + b[2] * c2)


def split(arr):
    return (arr[..., 0], arr[..., 1], arr[..., 2])


def join(vec):
    return np.stack(vec, axis=-1)


# linear maps R^2 -> E^3 stored as (..., 3, 2) ------------------------------
def lin_norm(m):
    """Operator norm (largest singular value) of a field of 3x2 matrices."""
    return np.sqrt(SymForm2.from_matrix(np.swapaxes(m, -1, -2) @ m).eigvals()[1].clip(0.0))


def lin_lambda(m):
    """inf |m v| / |v|: the smallest singular value."""
    return np.sqrt(SymForm2.from_matrix(np.swapaxes(m, -1, -2) @ m).eigvals()[0].clip(0.0))


@dataclass(frozen=True)
class Frame3:
    t: np.ndarray
    w: np.ndarray
    n: np.ndarray

    def matrix(self):
        """Columns t, w, n."""
        return np.stack([self.t, self.w, self.n], axis=-1)

    def defect(self):
        m = self.matrix()
        gram = np.swapaxes(m, -1, -2) @ m
        ortho = np.max(np.abs(gram - np.eye(3)))
        det = np.max(np.abs(np.linalg.det(m) - 1.0))
        return max(float(ortho), float(det))


@dataclass(frozen=True)
class StepReport:
    k: int
    i: int
    N: int
    err: float
    eta_min: float
    alpha_max: float
    X_max: float
    lambda_min: float

    FIELDS = ("k", "i", "N", "err", "eta_min", "alpha_max", "X_max", "lambda_min")

    def row(self):
        return [getattr(self, f) for f in self.FIELDS]


def _immersion_guard(dv, dw):
    cr = vcross(dv, dw)
    area2 = vdot(cr, cr)
    val = area2.value if isinstance(area2, jets.Jet) else area2
    if np.any(~np.isfinite(val)) or np.any(val <= 1e-300):
        raise ImmersionLossError("degenerate differential: df(v) and df(w) are parallel")
    return cr, area2


def corrugation_frame(fr, fp, i, system=WAVEFRONTS):
    """Frame (t, w, n) of the differential (fr, fp) for direction i."""
    wv = system.w_i(i)
    vv = system.v_i(i)
    dw = vcomb(wv[0], fr, wv[1], fp)
    dv = vcomb(vv[0], fr, vv[1], fp)
    cr, area2 = _immersion_guard(dv, dw)
    n = vscale(cr, 1.0 / jets.sqrt(area2))
    w = vscale(dw, 1.0 / jets.sqrt(vdot(dw, dw)))
    t = vcross(w, n)
    return t, w, n


def u_vector(fr, fp, i, system=WAVEFRONTS):
    """Coefficients (u_rho, u_phi) of the vector with l_i(u) = 1 and df(u) orthogonal to df(w_i)."""
    wv = system.w_i(i)
    vv = system.v_i(i)
    dw = vcomb(wv[0], fr, wv[1], fp)
    dv = vcomb(vv[0], fr, vv[1], fp)
    _immersion_guard(dv, dw)
    c = -vdot(dv, dw) / vdot(dw, dw)
    return (vv[0] + c * wv[0], vv[1] + c * wv[1])


def _cone_check(eta, where=""):
    val = eta.value if isinstance(eta, jets.Jet) else eta
    bad = val < -ETA_TOL
    if np.any(bad):
        raise ConeViolationError(
            f"{int(np.sum(bad))} sample(s) with negative defect coordinate{where} "
            f"(min {float(np.min(val)):.3e})")


def corrugation_kernel(fr, fp, target, i, x, N, system=WAVEFRONTS, eta=None):
    """Displacement F - f of one corrugation step and its ingredients.

    fr, fp : partial derivatives of f (3-tuples).
    target : SymForm2 of the metric to approach (g_k).
    x      : the phase N * varpi_i.
    eta    : optional override of the defect coordinate.
    """
    wv = system.w_i(i)
    vv = system.v_i(i)
    dw = vcomb(wv[0], fr, wv[1], fp)
    dv = vcomb(vv[0], fr, vv[1], fp)
    cr, area2 = _immersion_guard(dv, dw)
    if eta is None:
        pull = SymForm2(vdot(fr, fr), vdot(fr, fp), vdot(fp, fp))
        eta = system.coord(i, target - pull)
    _cone_check(eta)
    if isinstance(eta, np.ndarray):
        eta = np.maximum(eta, 0.0)
    elif isinstance(eta, jets.Jet):
        eta.c[..., 0] = np.maximum(eta.c[..., 0], 0.0)
        if np.any(eta.c[..., 0] <= 0.0):
            # J0^{-1} has infinite slope at 1, so the jet of alpha does not exist
            raise SingularityError("exact differentials need a positive defect coordinate; "
                                   "use grid mode for zero-defect steps")
    ww = vdot(dw, dw)
    c = -vdot(dv, dw) / ww
    du = vcomb(1.0, dv, c, dw)
    nu2 = vdot(du, du)
    r = jets.sqrt(eta + nu2)
    ratio = jets.sqrt(nu2) / r
    if isinstance(ratio, jets.Jet):
        ratio.c[..., 0] = np.minimum(ratio.c[..., 0], 1.0)
    else:
        ratio = np.minimum(ratio, 1.0)
    alpha = jets.j0inv(ratio)
    n = vscale(cr, 1.0 / jets.sqrt(area2))
    w = vscale(dw, 1.0 / jets.sqrt(ww))
    t = vcross(w, n)
    pc, ps = jets.loop_periodic(alpha, x)
    disp = vscale(vcomb(pc, t, ps, n), r / N)
    return {"disp": disp, "eta": eta, "r": r, "alpha": alpha, "du": du, "nu2": nu2,
            "t": t, "w": w, "n": n}


def target_differential(fr, fp, parts, i, x, system=WAVEFRONTS):
    """L = df + (z - df(u)) (x) l_i with z = r (cos theta t + sin theta n)."""
    frac = x - np.floor(x)
    theta = parts["alpha"] * np.cos(2.0 * pi * frac)
    z = vscale(vcomb(np.cos(theta), parts["t"], np.sin(theta), parts["n"]), parts["r"])
    jump = join(z) - join(parts["du"])
    lr, lp = system.ell_i(i)
    L = np.stack([join(fr) + lr * jump, join(fp) + lp * jump], axis=-1)
    return L, theta


@dataclass
class StageData:
    """Everything measured during one step, on a flat or gridded sample set."""

    k: int
    i: int
    N: int
    rho: np.ndarray
    phi: np.ndarray
    f_prev: np.ndarray
    f: np.ndarray
    df_prev: np.ndarray
    df: np.ndarray
    L: np.ndarray
    eta: np.ndarray
    alpha: np.ndarray
    X: np.ndarray
    theta: np.ndarray
    err_field: np.ndarray
    frame_prev: Frame3
    report: StepReport = None

    def gap_field(self):
        """|df - L| at every sample."""
        return lin_norm(self.df - self.L)

    def move_field(self):
        return np.linalg.norm(self.f - self.f_prev, axis=-1)


def measure_stage(k, i, N, rho, phi, f_prev, f_new, df_prev, df_new, target, system=WAVEFRONTS,
                  parts=None, x=None):
    """Assemble StageData from values of f and df before and after a step."""
    fr, fp = split(df_prev[..., 0]), split(df_prev[..., 1])
    if parts is None:
        parts = corrugation_kernel(fr, fp, target, i, x, N, system)
    L, theta = target_differential(fr, fp, parts, i, x, system)
    eta = parts["eta"]
    X = eta / parts["nu2"]
    pull_prev = pullback_of_matrix(df_prev)
    mu = pull_prev + system.ell_sq(i) * eta
    err_field = (mu - pullback_of_matrix(df_new)).norm()
    frame = Frame3(join(parts["t"]), join(parts["w"]), join(parts["n"]))
    data = StageData(k, i, N, rho, phi, f_prev, f_new, df_prev, df_new, L, eta,
                     parts["alpha"], X, theta, err_field, frame)
    data.report = StepReport(k, i, N, float(np.max(err_field)), float(np.min(eta)),
                             float(np.max(parts["alpha"])), float(np.max(X)),
                             float(np.min(lin_lambda(df_new))))
    return data


def pullback_of_matrix(m):
    return SymForm2.from_matrix(np.swapaxes(m, -1, -2) @ m)


def corrugate_grid(grid, k, i, N, system=WAVEFRONTS, eta=None):
    """cp_step on a FieldGrid, returning the new grid and the stage measurements."""
    layer = (k, i, N)
    check_resolution(grid, tuple(grid.history) + (layer,))
    df = differentiate(grid)
    rho, phi = grid.mesh_coords()
    target = metric_ladder(k, rho)
    x = system.phase_frac(i, N, rho, phi)
    fr, fp = split(df.d_rho), split(df.d_phi)
    parts = corrugation_kernel(fr, fp, target, i, x, N, system, eta=eta)
    nodes = grid.nodes + join(parts["disp"])
    new = grid.with_nodes(nodes, (k, i), tuple(grid.history) + (layer,))
    dnew = differentiate(new)
    data = measure_stage(k, i, N, rho, phi, grid.nodes, nodes, df.matrices(), dnew.matrices(),
                         target, system, parts=parts, x=x)
    return new, data


def cp_step(grid, k, i, N, system=WAVEFRONTS):
    """One corrugation step on a grid: returns (FieldGrid, StepReport)."""
    new, data = corrugate_grid(grid, k, i, N, system)
    return new, data.report
