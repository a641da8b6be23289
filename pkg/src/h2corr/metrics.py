"""Symmetric bilinear forms on R^2 and the metric data of the construction.

Forms are written E drho^2 + 2 F drho dphi + G dphi^2.  All coefficients may be
numpy arrays, so one SymForm2 can hold a whole field of forms.
"""
from dataclasses import dataclass
from functools import lru_cache
from math import pi

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError, SingularityError

A_SLOPE = 7.0 / (2.0 * pi)


@dataclass(frozen=True)
class SymForm2:
    E: object
    F: object
    G: object

    def __add__(self, other):
        return SymForm2(self.E + other.E, self.F + other.F, self.G + other.G)

    def __sub__(self, other):
        return SymForm2(self.E - other.E, self.F - other.F, self.G - other.G)

    def __neg__(self):
        return SymForm2(-self.E, -self.F, -self.G)

    def __mul__(self, s):
        return SymForm2(s * self.E, s * self.F, s * self.G)

    __rmul__ = __mul__

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m, dtype=float)
        return cls(m[..., 0, 0], 0.5 * (m[..., 0, 1] + m[..., 1, 0]), m[..., 1, 1])

    @classmethod
    def outer(cls, ell):
        """ell (x) ell for a covector ell = (l_rho, l_phi)."""
        lr, lp = ell
        return cls(lr * lr, lr * lp, lp * lp)

    def matrix(self):
        E, F, G = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in (self.E, self.F, self.G)))
        return np.stack([np.stack([E, F], -1), np.stack([F, G], -1)], -2)

    def __call__(self, v, w=None):
        """b(v, w); v and w are pairs (v_rho, v_phi)."""
        if w is None:
            w = v
        return (self.E * v[0] * w[0] + self.F * (v[0] * w[1] + v[1] * w[0])
                + self.G * v[1] * w[1])

    def eigvals(self):
        """(lambda_min, lambda_max), closed form for 2x2 symmetric matrices."""
        half_tr = 0.5 * (self.E + self.G)
        rad = np.sqrt((0.5 * (self.E - self.G)) ** 2 + self.F ** 2)
        return half_tr - rad, half_tr + rad

    def norm(self):
        """sup |b(v,v)| / |v|^2 = max(|lambda_min|, |lambda_max|)."""
        lo, hi = self.eigvals()
        return np.maximum(np.abs(lo), np.abs(hi))

    def det(self):
        return self.E * self.G - self.F * self.F

    def is_psd(self, tol=0.0):
        lo, _ = self.eigvals()
        return lo >= -tol

    def at(self, index):
        return SymForm2(*(np.asarray(c)[index] for c in (self.E, self.F, self.G)))


@dataclass(frozen=True)
class ConeCoords:
    eta1: object
    eta2: object
    eta3: object

    def as_array(self):
        return np.stack(np.broadcast_arrays(self.eta1, self.eta2, self.eta3), axis=-1)

    def __getitem__(self, i):
        """Coordinate by direction index 1, 2, 3."""
        return (self.eta1, self.eta2, self.eta3)[i - 1]

    def min(self):
        return float(np.min(self.as_array()))

    def in_cone(self):
        return np.all(self.as_array() > 0.0, axis=-1)


@dataclass(frozen=True)
class WavefrontSystem:
    """The three wavefront covectors with their kernel and transverse vectors.

    Directions are indexed 1, 2, 3; indices are taken cyclically, so 0 means 3
    and 4 means 1.
    """

    a: float = A_SLOPE

    @property
    def ell(self):
        a = self.a
        return np.array([[-1.0, 0.0], [1.0, -a], [1.0, a]])

    @property
    def w(self):
        a = self.a
        return np.array([[0.0, -1.0], [a, 1.0], [-a, 1.0]])

    @property
    def v(self):
        return np.array([[-1.0, 0.0], [1.0, 0.0], [1.0, 0.0]])

    @staticmethod
    def cyc(i):
        return (i - 1) % 3 + 1

    def ell_i(self, i):
        return self.ell[self.cyc(i) - 1]

    def w_i(self, i):
        return self.w[self.cyc(i) - 1]

    def v_i(self, i):
        return self.v[self.cyc(i) - 1]

    def ell_sq(self, i):
        return SymForm2.outer(self.ell_i(i))

    def varpi(self, i, rho, phi):
        """Wavefront function: -rho, rho - a phi, rho + a phi."""
        lr, lp = self.ell_i(i)
        return lr * np.asarray(rho) + lp * np.asarray(phi)

    def phase(self, i, N, rho, phi):
        """N * varpi_i(rho, phi), written to keep large N accurate."""
        lr, lp = self.ell_i(i)
        rho = np.asarray(rho, dtype=float)
        phi = np.asarray(phi, dtype=float)
        return (N * lr) * rho + (N * lp) * phi

    def phase_frac(self, i, N, rho, phi):
        """Fractional part of the phase N * varpi_i, free of the rounding of N * varpi.

        Each term N * c * x is the exact real product of the three doubles,
        reduced mod 1, so the result stays accurate for N up to 2^53.
        """
        lr, lp = self.ell_i(i)
        rho = np.asarray(rho, dtype=float)
        phi = np.asarray(phi, dtype=float)
        total = _frac_of_triple(float(N), lr, rho) + _frac_of_triple(float(N), lp, phi)
        return total - np.floor(total)

    def phase_frac_rational(self, i, N, num, den, phi):
        """phase_frac at rho = num / den, with the rho part done in integers.

        Needs an integer rho-coefficient of l_i, which holds for all three forms.
        """
        lr, lp = self.ell_i(i)
        if lr != int(lr):
            raise DomainError("rational phases need an integer rho coefficient")
        head = ((int(lr) * int(N) * int(num)) % int(den)) / int(den)
        total = head + _frac_of_triple(float(N), lp, np.asarray(phi, dtype=float))
        return total - np.floor(total)

    def gram_det(self):
        basis = np.array([[self.ell_sq(i).E, self.ell_sq(i).F, self.ell_sq(i).G] for i in (1, 2, 3)])
        return float(np.linalg.det(basis))

    def coords(self, b):
        a = self.a
        return ConeCoords(b.E - b.G / a ** 2,
                          b.G / (2 * a ** 2) - b.F / (2 * a),
                          b.G / (2 * a ** 2) + b.F / (2 * a))

    def coord(self, i, b):
        return self.coords(b)[self.cyc(i)]

    def reconstruct(self, c):
        out = self.ell_sq(1) * c.eta1 + self.ell_sq(2) * c.eta2 + self.ell_sq(3) * c.eta3
        return out


WAVEFRONTS = WavefrontSystem()

_SPLITTER = 134217729.0


def _split(x):
    t = _SPLITTER * x
    hi = t - (t - x)
    return hi, x - hi


def _two_product(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _frac_of_product(a, b):
    """frac(a * b) using an exact two-product."""
    p, err = _two_product(a, b)
    out = (p - np.floor(p)) + err
    return out - np.floor(out)


def _frac_of_triple(n, c, x):
    """frac(n * c * x) with c * x first split into a double-double."""
    hi, lo = _two_product(c, x)
    out = _frac_of_product(n, hi) + _frac_of_product(n, lo)
    return out - np.floor(out)


def _check_rho(rho, allow_one=True):
    r = np.asarray(rho, dtype=float)
    if np.any(r <= 0.0):
        raise DomainError("rho must be positive")
    if not allow_one and np.any(r >= 1.0):
        raise SingularityError("the hyperbolic metric blows up at rho = 1")
    if allow_one and np.any(r > 1.0):
        raise DomainError("rho must not exceed 1")
    return r


def h_metric(rho):
    """Hyperbolic metric 4 (drho^2 + rho^2 dphi^2) / (1 - rho^2)^2."""
    r = _check_rho(rho, allow_one=False)
    conf = 4.0 / (1.0 - r * r) ** 2
    return SymForm2(conf, np.zeros_like(conf), conf * r * r)


def h_coords(b, system=WAVEFRONTS):
    return system.coords(b)


def pullback_f0(rho):
    """Induced metric of the initial paraboloid-like embedding."""
    r = np.asarray(rho, dtype=float)
    return SymForm2(4.0 * (1.0 + 2.0 * r * r), np.zeros_like(r), 4.0 * r * r)


def defect_delta(rho):
    """h - f0^*<.,.>."""
    return h_metric(rho) - pullback_f0(rho)


def ladder_polynomials(k):
    """Coefficients (in powers of rho) of E and G of the metric g_k."""
    deg = 2 * (k + 1) if k >= 1 else 2
    e = np.zeros(deg + 1)
    g = np.zeros(deg + 1)
    e[0], e[2] = 4.0, 8.0
    g[2] = 4.0
    for n in range(1, k + 1):
        e[2 * (n + 1)] += 4.0 * (n + 2)
        g[2 * (n + 1)] += 4.0 * (n + 1)
    return e, g


def metric_ladder(k, rho):
    """g_k = f0^* + delta_k^E drho^2 + delta_k^G dphi^2."""
    if k < 0:
        raise DomainError("ladder index must be non-negative")
    r = np.asarray(rho, dtype=float)
    base = pullback_f0(r)
    de = np.zeros_like(r)
    dg = np.zeros_like(r)
    for n in range(1, k + 1):
        p = r ** (2 * (n + 1))
        de = de + 4.0 * (n + 2) * p
        dg = dg + 4.0 * (n + 1) * p
    return SymForm2(base.E + de, base.F, base.G + dg)


def ladder_increment_coords(k, rho, system=WAVEFRONTS):
    """Closed-form cone coordinates of g_k - g_{k-1}."""
    if k < 1:
        raise DomainError("increment index must be >= 1")
    a = system.a
    p = 4.0 * np.asarray(rho, dtype=float) ** (2 * (k + 1))
    side = p * (k + 1) / (2 * a * a)
    return ConeCoords(p * (k + 2 - (k + 1) / (a * a)), side, side)


def _functional_norm(i, samples, seed, system):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((samples, 3))
    forms = SymForm2(x[:, 0], x[:, 1], x[:, 2])
    ratio = np.abs(system.coord(i, forms)) / forms.norm()
    best = x[int(np.argmax(ratio))]

    def neg_ratio(y):
        f = SymForm2(y[0], y[1], y[2])
        n = f.norm()
        return 0.0 if n == 0 else -abs(system.coord(i, f)) / n

    res = minimize(neg_ratio, best, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
    return max(float(np.max(ratio)), -float(res.fun))


@lru_cache(maxsize=8)
def functional_norms(samples=100_000, seed=0, system=WAVEFRONTS):
    """Operator norms of H_1, H_2, H_3 with respect to the spectral norm."""
    return tuple(_functional_norm(i, samples, seed + i, system) for i in (1, 2, 3))


def hmax_and_ch(samples=100_000, seed=0, system=WAVEFRONTS):
    """h_max = max ||H_i|| and C_H = 1 + h_max (||l_2^2|| + ||l_3^2||)."""
    hmax = max(functional_norms(samples, seed, system))
    ch = 1.0 + hmax * (float(system.ell_sq(2).norm()) + float(system.ell_sq(3).norm()))
    return hmax, ch
