"""Pointwise formal corrugation: the monomorphism fields Phi_{k,i}, their
metrics, the rotation pairs (alpha, beta) and the normal patterns they build.

Everything here is a closed-form function of (rho, phi) and works on numpy
arrays of sample points.  Frames are stored as 3x3 matrices whose columns are
(t, w, n).
"""
from dataclasses import dataclass, field
from math import pi

import numpy as np

from .errors import ConeViolationError, ConsistencyError, DomainError, VerificationFailure
from .metrics import WAVEFRONTS, SymForm2, ladder_increment_coords, metric_ladder
from .schedule import DIRECTIONS, Schedule
from .specfun import bessel_j0_inv
from .sphere import SpherePointSet, hausdorff_sphere

FormalSchedule = Schedule

ISOMETRY_TOL = 1e-10
E3 = np.array([0.0, 0.0, 1.0])


def _arr(x):
    return np.asarray(x, dtype=float)


# metrics ---------------------------------------------------------------------
def mu_phi(k, i, rho, system=WAVEFRONTS):
    """g_{k-1} plus the first i cone components of g_k - g_{k-1}."""
    if k < 1:
        raise DomainError("mu_phi needs k >= 1")
    if not 0 <= i <= 3:
        raise DomainError("mu_phi needs 0 <= i <= 3")
    rho = _arr(rho)
    out = metric_ladder(k - 1, rho)
    if i == 0:
        return out
    inc = ladder_increment_coords(k, rho, system)
    for j in range(1, i + 1):
        out = out + system.ell_sq(j) * inc[j]
    return out


def _previous_metric(k, i, rho, system):
    """mu_{k,i-1}, reading mu_{k,0} as g_{k-1}."""
    return mu_phi(k, i - 1, rho, system)


# rotation pairs --------------------------------------------------------------
@dataclass(frozen=True)
class RotationPair:
    alpha: object
    beta: object
    Z: object


def z_coefficient(k, i, rho, system=WAVEFRONTS):
    """|Phi_{k,i-1}(u)|^2 written in the basis (w_{i-1}, w_i), with w_0 = w_3.

    u is the vector with l_i(u) = 1 whose image is orthogonal to Phi(w_i).
    """
    mu = _previous_metric(k, i, rho, system)
    wp, wi = system.w_i(i - 1), system.w_i(i)
    lw = float(system.ell_i(i) @ wp)
    a, b, c = mu(wp), mu(wi), mu(wp, wi)
    return a / lw ** 2 * (1.0 - c * c / (a * b))


def z_coefficient_displayed(k, i, rho, system=WAVEFRONTS):
    """The variant with the roles of w_{i-1} and w_i swapped in the projection.

    Kept for comparison only: it is |Phi(u')|^2 for the u' orthogonal to
    w_{i-1}, which is not the vector the corrugation uses.
    """
    mu = _previous_metric(k, i, rho, system)
    wp, wi = system.w_i(i - 1), system.w_i(i)
    lw = float(system.ell_i(i) @ wp)
    a, b, c = mu(wp), mu(wi), mu(wp, wi)
    return a / lw ** 2 * (a * b / (c * c) - 1.0)


def rotation_pair(k, i, rho, system=WAVEFRONTS):
    """Amplitude alpha, turning angle beta and Z for stage (k, i) at radius rho.

    beta is the signed angle from Phi_{k,i}(w_i) to Phi_{k,i}(w_{i+1}) about
    the normal; both directions share the orientation of the parameter plane,
    so the sign is that of det(w_i, w_{i+1}).
    """
    rho = _arr(rho)
    if np.any(rho <= 0.0) or np.any(rho > 1.0):
        raise DomainError("rotation_pair needs 0 < rho <= 1")
    Z = z_coefficient(k, i, rho, system)
    eta = ladder_increment_coords(k, rho, system)[system.cyc(i)]
    alpha = bessel_j0_inv(np.sqrt(Z / (eta + Z)))
    mu = mu_phi(k, i, rho, system)
    wi, wn = system.w_i(i), system.w_i(i + 1)
    orient = wi[0] * wn[1] - wi[1] * wn[0]
    beta = np.arctan2(np.sqrt(mu.det()) * orient, mu(wi, wn))
    return RotationPair(alpha, beta, Z)


def rotation_L(theta):
    """Rotation in the (t, n) plane: t -> cos t + sin n."""
    c, s = np.cos(theta), np.sin(theta)
    z, o = np.zeros_like(c), np.ones_like(c)
    return np.stack([np.stack([c, z, -s], -1), np.stack([z, o, z], -1),
                     np.stack([s, z, c], -1)], -2)


def rotation_R(beta):
    """Rotation about the normal (third axis) by beta."""
    c, s = np.cos(beta), np.sin(beta)
    z, o = np.zeros_like(c), np.ones_like(c)
    return np.stack([np.stack([c, -s, z], -1), np.stack([s, c, z], -1),
                     np.stack([z, z, o], -1)], -2)


def rotation_z(angle):
    return rotation_R(angle)


# frames ----------------------------------------------------------------------
def frame_of(Phi, i, system=WAVEFRONTS):
    """Frame (t, w, n) of a monomorphism field Phi (..., 3, 2) for direction i."""
    Dw = Phi @ system.w_i(i)
    Dv = Phi @ system.v_i(i)
    n = np.cross(Dv, Dw)
    n = n / np.linalg.norm(n, axis=-1, keepdims=True)
    w = Dw / np.linalg.norm(Dw, axis=-1, keepdims=True)
    return np.stack([np.cross(w, n), w, n], axis=-1)


def initial_differential(rho, phi):
    """df0 = (d_rho f0, d_phi f0) as (..., 3, 2)."""
    rho, phi = np.broadcast_arrays(_arr(rho), _arr(phi))
    c, s = np.cos(phi), np.sin(phi)
    fr = 2.0 * np.stack([c, s, np.sqrt(2.0) * rho], -1)
    fp = 2.0 * rho[..., None] * np.stack([-s, c, np.zeros_like(c)], -1)
    return np.stack([fr, fp], -1)


def initial_frame(rho, phi):
    """Analytic frame of df0 for direction 1, as columns (t, w, n)."""
    rho, phi = np.broadcast_arrays(_arr(rho), _arr(phi))
    c, s = np.cos(phi), np.sin(phi)
    q = np.sqrt(2.0) * rho
    scale = 1.0 / np.sqrt(1.0 + q * q)
    n = np.stack([-q * c, -q * s, np.ones_like(c)], -1) * scale[..., None]
    w = np.stack([s, -c, np.zeros_like(c)], -1)
    return np.stack([np.cross(w, n), w, n], axis=-1)


# the formal process ----------------------------------------------------------
@dataclass
class FormalPoint:
    """State of the formal process at a batch of points after stage ``stage``.

    ``frame`` is the frame of Phi for the next direction.  ``half_frame`` and
    ``theta`` are those of the step that produced this point (None at start).
    """

    rho: np.ndarray
    phi: np.ndarray
    Phi: np.ndarray
    frame: np.ndarray
    mu: SymForm2
    stage: tuple
    half_frame: np.ndarray = None
    theta: np.ndarray = None
    eta: np.ndarray = None

    @classmethod
    def initial(cls, rho, phi, system=WAVEFRONTS):
        rho, phi = np.broadcast_arrays(_arr(rho), _arr(phi))
        Phi = initial_differential(rho, phi)
        return cls(rho.copy(), phi.copy(), Phi, frame_of(Phi, 1, system),
                   metric_ladder(0, rho), (1, 0))

    @property
    def next_stage(self):
        k, i = self.stage
        return (k, i + 1) if i < 3 else (k + 1, 1)

    def pullback(self):
        return SymForm2.from_matrix(np.swapaxes(self.Phi, -1, -2) @ self.Phi)


def _isometry_defect(Phi, mu):
    pull = SymForm2.from_matrix(np.swapaxes(Phi, -1, -2) @ Phi)
    return (pull - mu).norm() / mu.norm()


def fcp_step(pt, N, system=WAVEFRONTS):
    """One formal corrugation step with number N towards g_k.

    Raises
    ------
    ConeViolationError
        if the defect coordinate is negative beyond rounding.
    ConsistencyError
        if the new field misses its metric by more than ISOMETRY_TOL (relative).
    """
    k, i = pt.next_stage
    Phi = pt.Phi
    frame = frame_of(Phi, i, system)
    t, n = frame[..., 0], frame[..., 2]
    ell, wv, vv = system.ell_i(i), system.w_i(i), system.v_i(i)
    eta = system.coord(i, metric_ladder(k, pt.rho) - pt.pullback())
    scale = metric_ladder(k, pt.rho).norm()
    if np.any(eta < -ISOMETRY_TOL * scale):
        raise ConeViolationError(f"stage ({k},{i}): negative defect coordinate "
                                 f"{float(np.min(eta)):.3e}")
    eta = np.maximum(eta, 0.0)
    Dw = Phi @ wv
    Dv = Phi @ vv
    c = -np.sum(Dv * Dw, -1) / np.sum(Dw * Dw, -1)
    Du = Dv + c[..., None] * Dw
    du = np.linalg.norm(Du, axis=-1)
    r = np.sqrt(eta + du * du)
    alpha = bessel_j0_inv(np.minimum(du / r, 1.0))
    x = system.phase_frac(i, N, pt.rho, pt.phi)
    theta = alpha * np.cos(2.0 * pi * x)
    z = r[..., None] * (np.cos(theta)[..., None] * t + np.sin(theta)[..., None] * n)
    new = Phi + (z - Du)[..., None] * ell
    mu = mu_phi(k, i, pt.rho, system)
    defect = _isometry_defect(new, mu)
    if np.any(defect > ISOMETRY_TOL):
        raise ConsistencyError(f"stage ({k},{i}): formal map misses its metric by "
                               f"{float(np.max(defect)):.3e}")
    half = frame_of(new, i, system)
    return FormalPoint(pt.rho, pt.phi, new, frame_of(new, i + 1, system), mu, (k, i),
                       half, theta, eta)


def fcp_run(schedule, rho, phi, depth=None, system=WAVEFRONTS):
    """All formal states from Phi_{1,0} = df0 through stage (depth, 3)."""
    depth = schedule.depth if depth is None else depth
    pts = [FormalPoint.initial(rho, phi, system)]
    for k in range(1, depth + 1):
        for i in DIRECTIONS:
            pts.append(fcp_step(pts[-1], schedule.N(k, i), system))
    return pts


# normal patterns -------------------------------------------------------------
def _phase(system, i, N, rho, phi, rho_ratio):
    if rho_ratio is None:
        return system.phase_frac(i, N, rho, phi)
    return system.phase_frac_rational(i, N, rho_ratio[0], rho_ratio[1], phi)


def _stage_matrices(schedule, k, rho, phi, system, rho_ratio=None):
    out = []
    for i in DIRECTIONS:
        pair = rotation_pair(k, i, rho, system)
        x = _phase(system, i, schedule.N(k, i), rho, phi, rho_ratio)
        theta = pair.alpha * np.cos(2.0 * pi * x)
        out.append(rotation_L(theta) @ rotation_R(np.broadcast_to(pair.beta, np.shape(theta))))
    return out


def pattern_matrix(schedule, j, kstar, rho, phi, system=WAVEFRONTS, rho_ratio=None):
    """Product of L(theta_{k,i}) R(beta_{k,i}) over j <= k <= kstar, ascending.

    ``rho_ratio = (m, M)`` evaluates the phases at the exact radius m / M.
    """
    rho, phi = np.broadcast_arrays(_arr(rho), _arr(phi))
    if kstar > schedule.depth:
        raise DomainError(f"schedule has depth {schedule.depth} < {kstar}")
    prod = np.broadcast_to(np.eye(3), rho.shape + (3, 3)).copy()
    for k in range(max(j, 1), kstar + 1):
        for m in _stage_matrices(schedule, k, rho, phi, system, rho_ratio):
            prod = prod @ m
    return prod


def normal_pattern(schedule, j, kstar, rho, phi, system=WAVEFRONTS, rho_ratio=None):
    """nu(j) = (prod over j <= k <= kstar of L R) e3; e3 for an empty product.

    The factors are applied right to left to e3, last stage first.
    ``rho_ratio`` is as in pattern_matrix.
    """
    rho, phi = np.broadcast_arrays(_arr(rho), _arr(phi))
    if kstar > schedule.depth:
        raise DomainError(f"schedule has depth {schedule.depth} < {kstar}")
    v = np.broadcast_to(E3, rho.shape + (3,)).copy()
    for k in range(kstar, max(j, 1) - 1, -1):
        for m in reversed(_stage_matrices(schedule, k, rho, phi, system, rho_ratio)):
            v = np.einsum("...ab,...b->...a", m, v)
    return v


def formal_frame(schedule, kstar, rho, phi, system=WAVEFRONTS, rho_ratio=None):
    """F_{kstar} = F0 times the full pattern product."""
    return initial_frame(rho, phi) @ pattern_matrix(schedule, 1, kstar, rho, phi, system, rho_ratio)


def formal_normal(schedule, kstar, rho, phi, route="frame", system=WAVEFRONTS, rho_ratio=None):
    """n = F0(rho, phi) nu.  route="rotated" uses R_phi F0(rho, 0) nu instead."""
    rho, phi = np.broadcast_arrays(_arr(rho), _arr(phi))
    nu = normal_pattern(schedule, 1, kstar, rho, phi, system, rho_ratio)
    if route == "frame":
        f0 = initial_frame(rho, phi)
    elif route == "rotated":
        f0 = rotation_z(phi) @ initial_frame(rho, np.zeros_like(phi))
    else:
        raise DomainError(f"unknown route {route!r}")
    return np.einsum("...ab,...b->...a", f0, nu)


def tail_bound(rho, kstar, max_levels=4000, tol=1e-17, system=WAVEFRONTS):
    """sqrt(2) * sum over k > kstar and i of alpha_{k,i}(rho); inf if not summable."""
    total = 0.0
    for k in range(kstar + 1, kstar + 1 + max_levels):
        term = sum(float(np.max(rotation_pair(k, i, rho, system).alpha)) for i in DIRECTIONS)
        total += np.sqrt(2.0) * term
        if term < tol:
            return total
    return float("inf")


# symmetry laws ---------------------------------------------------------------
def _circle_radius(schedule, m):
    M = schedule.M
    if not 1 <= m <= M - 1:
        raise DomainError(f"need 1 <= m <= M - 1 = {M - 1}, got {m}")
    return m / M


def scaling_law_check(schedule, n, m, kstar=None, samples=1000, system=WAVEFRONTS):
    """sup over a phi sweep of |nu(n N)(m/M, phi) - nu(N)(m/M, n phi)|."""
    kstar = schedule.depth if kstar is None else kstar
    rho = _circle_radius(schedule, m)
    # snapped to a 2^-40 grid so that n * phi is exact for small n
    phi = np.round(np.linspace(0.0, 2.0 * pi, samples, endpoint=False) * 2.0 ** 40) / 2.0 ** 40
    if n == 1:
        return 0.0
    ratio = (m, schedule.M)
    big = normal_pattern(schedule.scaled(n), 1, kstar, rho, phi, system, ratio)
    small = normal_pattern(schedule, 1, kstar, rho, n * phi, system, ratio)
    return float(np.max(np.linalg.norm(big - small, axis=-1)))


@dataclass
class SelfSimilarityReport:
    j: int
    kstar: int
    rho: float
    L_j: int
    copies: int
    samples_per_arc: int
    distance: float
    bound: float
    slack: float
    subpattern_count: object
    tail: float
    refined: bool = False
    asserted: bool = False

    @property
    def within_bound(self):
        return self.distance <= self.bound + self.slack

    def as_dict(self):
        out = dict(self.__dict__)
        out["within_bound"] = self.within_bound
        return out


def _self_similarity_sets(schedule, j, kstar, rho, ratio, samples, system):
    Lj = schedule.L_j(j)
    arc = 2.0 * pi / (7 * Lj)
    local = np.arange(samples) * (arc / samples)
    pattern = normal_pattern(schedule, j, kstar, rho, local, system, ratio)
    starts = np.arange(7 * Lj) * arc
    if j <= 1:
        frames = initial_frame(rho, starts)
    else:
        frames = formal_frame(schedule, j - 1, rho, starts, system, ratio)
    union = np.einsum("lab,sb->lsa", frames, pattern).reshape(-1, 3)
    phi_all = (starts[:, None] + local[None, :]).ravel()
    whole = formal_normal(schedule, kstar, rho, phi_all, system=system, rho_ratio=ratio)
    return union, whole, arc


def self_similarity_report(schedule, j, m, kstar=None, samples=4096, refine=4,
                           system=WAVEFRONTS):
    """Compare the sampled normal image of the circle rho = m/M with 7 L_j
    frame-rotated copies of the level-j pattern on one fundamental arc.

    For j = 1 the distance must stay below 2 pi / (7 L) plus twice the arc
    sampling step; a VerificationFailure is raised otherwise.  Deeper levels
    are reported without assertion.
    """
    kstar = schedule.depth if kstar is None else kstar
    rho = _circle_radius(schedule, m)
    if kstar == 0 or j > kstar:
        # every pattern is the constant e3; the copies coincide with the image
        return SelfSimilarityReport(j, kstar, rho, schedule.L_j(max(j, 1)) if schedule.depth else 0,
                                    0, samples, 0.0, 0.0, 0.0, None, float(tail_bound(rho, kstar)))
    refined = False
    while True:
        union, whole, arc = _self_similarity_sets(schedule, j, kstar, rho, (m, schedule.M),
                                                  samples, system)
        dist = hausdorff_sphere(SpherePointSet(union), SpherePointSet(whole))
        bound = arc
        if refined or dist < 0.5 * bound or refine <= 1:
            break
        samples *= refine
        refined = True
    Lj = schedule.L_j(j)
    sub = schedule.L_j(j + 1) // Lj if j < kstar else None
    report = SelfSimilarityReport(j, kstar, rho, Lj, 7 * Lj, samples, dist, bound,
                                  2.0 * arc / samples, sub, float(tail_bound(rho, kstar)),
                                  refined, j == 1)
    if report.asserted and not report.within_bound:
        raise VerificationFailure(f"self-similarity distance {dist:.4e} exceeds "
                                  f"{bound + report.slack:.4e}")
    return report


@dataclass(frozen=True)
class WeierstrassModulus:
    bound: object
    actual: object
    tail: float

    @property
    def holds(self):
        return bool(np.all(np.asarray(self.actual) <= np.asarray(self.bound) + self.tail + 1e-12))


def weierstrass_modulus(schedule, rho, phi1, phi2, kstar=None, check=True, system=WAVEFRONTS):
    """(bound, actual) for |n(rho, phi2) - n(rho, phi1)| with the product cut at kstar.

    bound = sqrt(2) sum alpha_{k,i} |cos(2 pi N x2) - cos(2 pi N x1)| + |F0(p2) - F0(p1)|_F.
    The truncated normal obeys it exactly; ``tail`` is the extra slack owed to
    the untruncated limit.
    """
    kstar = schedule.depth if kstar is None else kstar
    rho, phi1, phi2 = np.broadcast_arrays(_arr(rho), _arr(phi1), _arr(phi2))
    total = np.linalg.norm(initial_frame(rho, phi2) - initial_frame(rho, phi1), axis=(-2, -1))
    for k in range(1, kstar + 1):
        for i in DIRECTIONS:
            alpha = rotation_pair(k, i, rho, system).alpha
            N = schedule.N(k, i)
            c2 = np.cos(2.0 * pi * system.phase_frac(i, N, rho, phi2))
            c1 = np.cos(2.0 * pi * system.phase_frac(i, N, rho, phi1))
            total = total + np.sqrt(2.0) * alpha * np.abs(c2 - c1)
    n2 = formal_normal(schedule, kstar, rho, phi2, system=system)
    n1 = formal_normal(schedule, kstar, rho, phi1, system=system)
    actual = np.linalg.norm(n2 - n1, axis=-1)
    rmax = float(np.max(rho)) if rho.size else 0.0
    out = WeierstrassModulus(total, actual, tail_bound(rmax, kstar) if rmax < 1.0 else float("inf"))
    if check and not np.all(actual <= total + 1e-12):
        raise VerificationFailure("truncated normal violates the Weierstrass bound")
    return out


# dumps -----------------------------------------------------------------------
PATTERN_COLUMNS = ("rho", "phi", "nx", "ny", "nz", "stage_k", "stage_i")


def pattern_rows(rho, phi, vectors, stage):
    """Rows for the pattern CSV; stage is the (k, i) of the last factor."""
    rho, phi = np.broadcast_arrays(_arr(rho), _arr(phi))
    v = np.asarray(vectors).reshape(-1, 3)
    k, i = stage
    return [(float(r), float(p), float(a), float(b), float(c), int(k), int(i))
            for r, p, (a, b, c) in zip(rho.ravel(), phi.ravel(), v)]


def sphere_chart(vectors):
    """(longitude, latitude) in radians of unit vectors."""
    v = np.asarray(vectors)
    return np.arctan2(v[..., 1], v[..., 0]), np.arcsin(np.clip(v[..., 2], -1.0, 1.0))
