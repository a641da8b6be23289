"""Bessel functions of the first kind and the oscillatory loop integrals.

Everything here works on numpy arrays as well as on plain floats.  The
integer-order Bessel values come from power series on the amplitude range
[0, kappa0) and from Miller's backward recurrence for larger arguments.
"""
from dataclasses import dataclass
from math import comb, factorial, pi

import numpy as np

from .errors import DomainError

_SERIES_SWITCH = 4.0
_SERIES_TERMS = 40


def _as_float_array(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def _wrap(arr, like):
    """Return a Python float when the input was a scalar."""
    if np.ndim(like) == 0 and np.ndim(arr) == 0:
        return float(arr)
    return arr


def _j01_series(x):
    """J0 and J1 by their Taylor series (accurate for |x| < 4)."""
    q = 0.25 * x * x
    t0 = np.ones_like(x)
    t1 = np.ones_like(x)
    s0 = t0.copy()
    s1 = t1.copy()
    for k in range(1, _SERIES_TERMS):
        t0 = -t0 * q / (k * k)
        t1 = -t1 * q / (k * (k + 1))
        s0 = s0 + t0
        s1 = s1 + t1
    return s0, 0.5 * x * s1


def _j01_miller(x):
    """J0 and J1 by Miller's backward recurrence normalised with
    J0 + 2 * sum J_2k = 1.  Used for x >= 4."""
    xmax = float(np.max(x))
    start = int(xmax + 30.0 + 6.0 * np.sqrt(xmax))
    start += start % 2
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    j1 = np.zeros_like(x)
    for n in range(start, 0, -1):
        j_prev = (2.0 * n / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        # j_cur now holds J_{n-1}
        if (n - 1) % 2 == 0 and n - 1 > 0:
            norm = norm + 2.0 * j_cur
        if n - 1 == 1:
            j1 = j_cur.copy()
        big = np.abs(j_cur) > 1e200
        if np.any(big):
            scale = np.where(big, 1e-200, 1.0)
            j_cur, j_next, norm, j1 = j_cur * scale, j_next * scale, norm * scale, j1 * scale
    norm = norm + j_cur
    return j_cur / norm, j1 / norm


def _j01(x):
    ax = np.abs(x)
    j0 = np.empty_like(ax)
    j1 = np.empty_like(ax)
    small = ax < _SERIES_SWITCH
    if np.any(small):
        j0[small], j1[small] = _j01_series(ax[small])
    if np.any(~small):
        j0[~small], j1[~small] = _j01_miller(ax[~small])
    j1 = np.where(x < 0, -j1, j1)
    return j0, j1


def bessel_j0(x):
    """Order-0 Bessel function of the first kind.

    Parameters
    ----------
    x : float or array_like
        Finite argument(s).

    Returns
    -------
    float or ndarray
    """
    arr = np.atleast_1d(_as_float_array(x))
    j0, _ = _j01(arr)
    return _wrap(j0.reshape(np.shape(x)), x)


def bessel_j1(x):
    """Order-1 Bessel function, equal to -J0'."""
    arr = np.atleast_1d(_as_float_array(x))
    _, j1 = _j01(arr)
    return _wrap(j1.reshape(np.shape(x)), x)


def _first_zero():
    x = 2.4
    for _ in range(8):
        j0, j1 = _j01(np.array([x]))
        x = x + j0[0] / j1[0]
    return x


@dataclass(frozen=True)
class BesselDomain:
    """Working interval [0, kappa0) of the amplitude function."""

    kappa0: float

    def contains(self, alpha):
        alpha = np.asarray(alpha)
        return (alpha >= 0.0) & (alpha < self.kappa0)


KAPPA0 = _first_zero()
DOMAIN = BesselDomain(KAPPA0)
SIGMA = 3.488629


def bessel_j0_inv(y):
    """Inverse of J0 restricted to [0, kappa0).

    Bracketed bisection with Newton refinement; returns alpha in
    [0, kappa0) with J0(alpha) = y.

    Raises
    ------
    DomainError
        if some y is outside (0, 1].
    """
    yarr = np.atleast_1d(_as_float_array(y, "y")).astype(float)
    if np.any(yarr <= 0.0) or np.any(yarr > 1.0):
        raise DomainError("J0 inverse needs 0 < y <= 1")
    lo = np.zeros_like(yarr)
    hi = np.full_like(yarr, KAPPA0)
    x = np.clip(2.0 * np.sqrt(1.0 - yarr), 1e-300, 0.999 * KAPPA0)
    active = yarr < 1.0
    for _ in range(200):
        if not np.any(active):
            break
        j0, j1 = _j01(x)
        fx = j0 - yarr
        lo = np.where(fx > 0, x, lo)
        hi = np.where(fx < 0, x, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x + fx / j1
        bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        converged = (np.abs(xn - x) <= 2e-16 * xn) | (fx == 0.0)
        x = np.where(active, xn, x)
        active = active & ~converged
    x = np.where(yarr == 1.0, 0.0, x)
    return _wrap(x.reshape(np.shape(y)), y)


def bessel_jn_table(x, nmax):
    """Values J_0(x) ... J_nmax(x), stacked on a trailing axis.

    Power series; intended for the amplitude range |x| <= kappa0 where it is
    accurate to a few ulps for every order.
    """
    x = np.asarray(x, dtype=float)
    half = 0.5 * x
    q = half * half
    n = np.arange(nmax + 1, dtype=float)
    lead = np.empty(x.shape + (nmax + 1,))
    lead[..., 0] = 1.0
    for m in range(1, nmax + 1):
        lead[..., m] = lead[..., m - 1] * half / m
    term = np.ones(x.shape + (nmax + 1,))
    total = term.copy()
    for k in range(1, 30):
        term = -term * q[..., None] / (k * (n + k))
        total += term
    return lead * total


def _signed_order(table, order):
    """J_order from a table of non-negative orders (J_{-n} = (-1)^n J_n)."""
    if order >= 0:
        return table[..., order]
    return (-1) ** (-order) * table[..., -order]


def bessel_derivatives(x, orders, nder):
    """d^a/dx^a J_n(x) for every n in ``orders`` and a = 0..nder.

    Uses J_n^(a) = 2^-a sum_l (-1)^l C(a, l) J_{n-a+2l}.  Returns an array of
    shape x.shape + (nder + 1, len(orders)).
    """
    orders = list(orders)
    top = max(abs(o) for o in orders) + nder + 1
    table = bessel_jn_table(x, top)
    out = np.zeros(np.shape(x) + (nder + 1, len(orders)))
    for col, n in enumerate(orders):
        for a in range(nder + 1):
            acc = 0.0
            for l in range(a + 1):
                acc = acc + (-1) ** l * comb(a, l) * _signed_order(table, n - a + 2 * l)
            out[..., a, col] = acc / 2.0 ** a
    return out


def _harmonic_count(alpha_max, order=0, tol=1e-17):
    h = 1
    while h < 200:
        amp = float(bessel_jn_table(np.array(alpha_max), h + 1)[..., h + 1])
        if abs(amp) * (2 * pi * (h + 1)) ** max(order - 1, 0) < tol:
            return h
        h += 1
    return h


def _check_alpha(alpha):
    alpha = _as_float_array(alpha, "alpha")
    if np.any(alpha < 0.0) or np.any(alpha >= KAPPA0):
        raise DomainError("amplitude must lie in [0, kappa0)")
    return alpha


def loop_integrals_periodic(alpha, x):
    """Periodic parts of the loop integrals.

    Returns (C - x J0(alpha), S) where C, S are the integrals of
    cos(alpha cos 2 pi s) and sin(alpha cos 2 pi s) over [0, x].  Both are
    1-periodic in x, so x is reduced modulo 1 before summing the
    Jacobi-Anger series.
    """
    alpha = _check_alpha(alpha)
    x = _as_float_array(x)
    alpha, x = np.broadcast_arrays(alpha, x)
    frac = x - np.floor(x)
    amax = float(np.max(alpha)) if alpha.size else 0.0
    nh = _harmonic_count(amax)
    table = bessel_jn_table(alpha, nh)
    pc = np.zeros(alpha.shape)
    ps = np.zeros(alpha.shape)
    for h in range(1, nh + 1):
        omega = 2.0 * pi * h
        coef = 2.0 * (-1) ** (h // 2) * table[..., h] / omega
        term = coef * np.sin(omega * frac)
        if h % 2 == 0:
            pc = pc + term
        else:
            ps = ps + term
    return pc, ps


def loop_integrals(alpha, x):
    """C = int_0^x cos(alpha cos 2 pi s) ds and S = int_0^x sin(alpha cos 2 pi s) ds."""
    pc, ps = loop_integrals_periodic(alpha, x)
    alpha = np.asarray(alpha, dtype=float)
    x = np.asarray(x, dtype=float)
    c = x * bessel_j0(np.atleast_1d(alpha)).reshape(alpha.shape) + pc
    if np.ndim(c) == 0:
        return float(c), float(ps)
    return c, ps


def loop_periodic_taylor(alpha, x, order):
    """Scaled partial derivatives of the periodic loop parts.

    Returns arrays cC, cS of shape alpha.shape + (order + 1, order + 1) with
    cC[..., a, b] = d^a/dalpha^a d^b/dx^b (C - x J0) / (a! b!) and the same for
    S, evaluated at (alpha, x).  Entries with a + b > order are zero.
    """
    alpha = np.asarray(alpha, dtype=float)
    x = np.asarray(x, dtype=float)
    frac = x - np.floor(x)
    amax = float(np.max(alpha)) if alpha.size else 0.0
    nh = _harmonic_count(amax, order)
    harmonics = np.arange(1, nh + 1)
    jd = bessel_derivatives(alpha, harmonics, order)  # (..., a, h)
    omega = 2.0 * pi * harmonics
    sign = 2.0 * (-1.0) ** (harmonics // 2)
    trig = np.empty(alpha.shape + (order + 1, nh))
    for b in range(order + 1):
        trig[..., b, :] = omega ** (b - 1) * np.sin(omega * frac[..., None] + 0.5 * b * pi)
    even = (harmonics % 2 == 0)
    cc = np.einsum("...ah,...bh->...ab", jd[..., even] * sign[even], trig[..., even])
    cs = np.einsum("...ah,...bh->...ab", jd[..., ~even] * sign[~even], trig[..., ~even])
    fact = np.array([[1.0 / (factorial(a) * factorial(b)) if a + b <= order else 0.0
                      for b in range(order + 1)] for a in range(order + 1)])
    return cc * fact, cs * fact
