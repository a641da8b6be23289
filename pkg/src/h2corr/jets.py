"""Truncated bivariate Taylor arithmetic ("jets") in the variables (rho, phi).

A jet of order m stores, for every sample point, the normalised Taylor
coefficients d^{p+q} f / (d rho^p d phi^q) / (p! q!) for p + q <= m.  Monomials
are ordered by total degree and, inside a degree, by increasing phi power, so
truncating a jet to a lower order is just taking a prefix.

Jets carry exact derivatives through the corrugation recursion: a layer of
order m produces the next layer at order m - 1.
"""
from functools import lru_cache
from math import comb

import numpy as np

from . import specfun


def n_coeffs(order):
    return (order + 1) * (order + 2) // 2


def mono_index(p, q):
    d = p + q
    return d * (d + 1) // 2 + q


@lru_cache(maxsize=None)
def monomials(order):
    return tuple((d - q, q) for d in range(order + 1) for q in range(d + 1))


@lru_cache(maxsize=None)
def _mul_tables(order):
    mons = monomials(order)
    rows = []
    for k, (p, q) in enumerate(mons):
        for i, (p1, q1) in enumerate(mons):
            if p1 <= p and q1 <= q:
                rows.append((k, i, mono_index(p - p1, q - q1)))
    rows.sort()
    out = np.array([r[0] for r in rows])
    left = np.array([r[1] for r in rows])
    right = np.array([r[2] for r in rows])
    starts = np.flatnonzero(np.r_[True, out[1:] != out[:-1]])
    return left, right, starts


@lru_cache(maxsize=None)
def _diff_tables(order):
    mons = monomials(order - 1)
    src_r = np.array([mono_index(p + 1, q) for p, q in mons])
    fac_r = np.array([p + 1.0 for p, q in mons])
    src_p = np.array([mono_index(p, q + 1) for p, q in mons])
    fac_p = np.array([q + 1.0 for p, q in mons])
    return src_r, fac_r, src_p, fac_p


class Jet:
    """Order-m bivariate Taylor polynomial attached to each sample point."""

    __slots__ = ("c", "order")
    __array_priority__ = 100

    def __init__(self, coeffs, order):
        self.c = coeffs
        self.order = order

    # constructors -------------------------------------------------------
    @classmethod
    def constant(cls, value, order):
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (n_coeffs(order),))
        c[..., 0] = value
        return cls(c, order)

    @classmethod
    def affine(cls, value, d_rho, d_phi, order):
        """value + d_rho * (rho - rho0) + d_phi * (phi - phi0)."""
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (n_coeffs(order),))
        c[..., 0] = value
        if order >= 1:
            c[..., 1] = d_rho
            c[..., 2] = d_phi
        return cls(c, order)

    @classmethod
    def from_poly_rho(cls, rho, poly_coeffs, order):
        """Jet in rho of sum_j poly_coeffs[j] rho^j (exact polynomial)."""
        rho = np.asarray(rho, dtype=float)
        c = np.zeros(rho.shape + (n_coeffs(order),))
        deg = len(poly_coeffs) - 1
        for p in range(min(order, deg) + 1):
            # p-th Taylor coefficient in rho of the polynomial at rho
            acc = np.zeros_like(rho)
            for j in range(p, deg + 1):
                if poly_coeffs[j] != 0:
                    acc = acc + poly_coeffs[j] * comb(j, p) * rho ** (j - p)
            c[..., mono_index(p, 0)] = acc
        return cls(c, order)

    # basic access -------------------------------------------------------
    @property
    def value(self):
        return self.c[..., 0]

    def truncate(self, order):
        if order >= self.order:
            return self
        return Jet(self.c[..., :n_coeffs(order)], order)

    def d_rho(self):
        src, fac, _, _ = _diff_tables(self.order)
        return Jet(self.c[..., src] * fac, self.order - 1)

    def d_phi(self):
        _, _, src, fac = _diff_tables(self.order)
        return Jet(self.c[..., src] * fac, self.order - 1)

    def gradient(self):
        """First partial derivatives at the expansion point."""
        return self.c[..., 1], self.c[..., 2]

    # arithmetic ---------------------------------------------------------
    def _align(self, other):
        m = min(self.order, other.order)
        return self.truncate(m), other.truncate(m), m

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b, m = self._align(other)
            return Jet(a.c + b.c, m)
        other = np.asarray(other, dtype=float)
        shape = np.broadcast_shapes(self.c.shape[:-1], other.shape) + self.c.shape[-1:]
        c = np.array(np.broadcast_to(self.c, shape))
        c[..., 0] = c[..., 0] + other
        return Jet(c, self.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.order)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b, m = self._align(other)
            left, right, starts = _mul_tables(m)
            prod = a.c[..., left] * b.c[..., right]
            return Jet(np.add.reduceat(prod, starts, axis=-1), m)
        return Jet(self.c * np.asarray(other, dtype=float)[..., None], self.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return Jet(self.c / np.asarray(other, dtype=float)[..., None], self.order)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    # composition --------------------------------------------------------
    def powers_of_increment(self):
        """Stack of (self - value)^j for j = 0..order, shape (..., m+1, K)."""
        m = self.order
        delta = Jet(self.c.copy(), m)
        delta.c[..., 0] = 0.0
        out = np.zeros(self.c.shape[:-1] + (m + 1, self.c.shape[-1]))
        out[..., 0, 0] = 1.0
        cur = None
        for j in range(1, m + 1):
            cur = delta if cur is None else cur * delta
            out[..., j, :] = cur.c
        return out

    def compose(self, taylor, powers=None):
        """sum_j taylor[..., j] (self - value)^j for Taylor coefficients of g at value."""
        if powers is None:
            powers = self.powers_of_increment()
        m = self.order
        return Jet(np.einsum("...j,...jk->...k", taylor[..., :m + 1], powers), m)

    def reciprocal(self):
        x0 = self.value
        j = np.arange(self.order + 1)
        taylor = (-1.0) ** j / x0[..., None] ** (j + 1)
        return self.compose(taylor)

    def sqrt(self):
        x0 = self.value
        j = np.arange(self.order + 1)
        binom = np.array([_binom_half(k) for k in j])
        taylor = binom * np.sqrt(x0)[..., None] / x0[..., None] ** j
        return self.compose(taylor)


def _binom_half(k):
    out = 1.0
    for i in range(k):
        out *= (0.5 - i) / (i + 1)
    return out


def series_mul(a, b):
    """Product of truncated univariate series stored on the last axis."""
    m = a.shape[-1]
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for i in range(m):
        out[..., i:] += a[..., i:i + 1] * b[..., :m - i]
    return out


def series_revert(c):
    """Reversion of f(d) = sum_{j>=1} c_j d^j: coefficients of f^{-1}(e).

    c has shape (..., m+1); c[..., 0] is ignored.  Returns b with the same
    shape, b[..., 0] = 0.
    """
    m = c.shape[-1] - 1
    b = np.zeros_like(c)
    if m == 0:
        return b
    b[..., 1] = 1.0 / c[..., 1]
    for n in range(2, m + 1):
        acc = np.zeros(c.shape[:-1])
        power = b.copy()
        for j in range(2, n + 1):
            power = series_mul(power, b)
            acc = acc + c[..., j] * power[..., n]
        b[..., n] = -acc / c[..., 1]
    return b


def _is_jet(x):
    return isinstance(x, Jet)


def sqrt(x):
    return x.sqrt() if _is_jet(x) else np.sqrt(x)


def j0inv(y):
    """Inverse Bessel amplitude for arrays or jets."""
    if not _is_jet(y):
        return specfun.bessel_j0_inv(y)
    m = y.order
    alpha0 = np.asarray(specfun.bessel_j0_inv(y.value))
    derivs = specfun.bessel_derivatives(alpha0, [0], m)[..., 0]
    fact = np.array([float(np.prod(np.arange(1, j + 1))) for j in range(m + 1)])
    taylor_j0 = derivs / fact
    inv = series_revert(taylor_j0)
    inv[..., 0] = alpha0
    return y.compose(inv)


def loop_periodic(alpha, x):
    """Periodic loop parts (C - x J0, S) for arrays or jets."""
    if not _is_jet(alpha) and not _is_jet(x):
        return specfun.loop_integrals_periodic(alpha, x)
    if not _is_jet(alpha):
        alpha = Jet.constant(alpha, x.order)
    if not _is_jet(x):
        x = Jet.constant(x, alpha.order)
    alpha, x, m = alpha._align(x)
    cc, cs = specfun.loop_periodic_taylor(alpha.value, x.value, m)
    pa = alpha.powers_of_increment()
    px = x.powers_of_increment()
    out = []
    for coef in (cc, cs):
        total = None
        for b in range(m + 1):
            q = Jet(np.einsum("...a,...ak->...k", coef[..., :, b], pa), m)
            term = q if b == 0 else q * Jet(px[..., b, :], m)
            total = term if total is None else total + term
        out.append(total)
    return out[0], out[1]
