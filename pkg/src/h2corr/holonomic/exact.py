"""Exact-differential evaluation of the corrugated maps at scattered points.

Each layer f_{k,i} is an explicit function of (rho, phi) built from f_{k,i-1}
and its first derivatives.  Carrying a truncated Taylor jet of f0 of order
S + 1 through S steps therefore yields the exact value and differential of
the last layer, with no grid and no resolution limit on N.
"""
from dataclasses import dataclass
from math import factorial

import numpy as np

from ..errors import ConfigurationError
from ..jets import Jet, mono_index, n_coeffs
from ..metrics import WAVEFRONTS, SymForm2, ladder_polynomials, metric_ladder
from .process import Frame3, StageData, StepReport, corrugation_kernel, measure_stage

CHUNK = 4096


def _trig_jet(phi, order, kind):
    """Jet of cos(phi) or sin(phi) in the phi variable."""
    phi = np.asarray(phi, dtype=float)
    c = np.zeros(phi.shape + (n_coeffs(order),))
    shift = 0.0 if kind == "cos" else -0.5 * np.pi
    for q in range(order + 1):
        c[..., mono_index(0, q)] = np.cos(phi + shift + 0.5 * np.pi * q) / factorial(q)
    return Jet(c, order)


def f0_jet(rho, phi, order):
    """Components of f0 = 2 (rho cos phi, rho sin phi, rho^2 / sqrt 2) as jets."""
    r = Jet.affine(rho, 1.0, 0.0, order)
    cos_j = _trig_jet(phi, order, "cos")
    sin_j = _trig_jet(phi, order, "sin")
    z = Jet.from_poly_rho(rho, [0.0, 0.0, np.sqrt(2.0)], order)
    return (r * cos_j * 2.0, r * sin_j * 2.0, z)


def ladder_jet(k, rho, order):
    e, g = ladder_polynomials(k)
    zero = Jet.constant(np.zeros(np.shape(rho)), order)
    return SymForm2(Jet.from_poly_rho(rho, e, order), zero, Jet.from_poly_rho(rho, g, order))


def _values(vec):
    return np.stack([c.value for c in vec], axis=-1)


def _gradients(vec):
    """Differential (..., 3, 2) from first-order jet coefficients."""
    return np.stack([np.stack([c.c[..., 1], c.c[..., 2]], axis=-1) for c in vec], axis=-2)


def _value_parts(parts):
    out = {}
    for key, val in parts.items():
        if isinstance(val, tuple):
            out[key] = tuple(c.value if isinstance(c, Jet) else c for c in val)
        else:
            out[key] = val.value if isinstance(val, Jet) else val
    return out


def _step_chunk(f, rho, phi, k, i, N, system):
    m = f[0].order - 1
    fr = tuple(c.d_rho() for c in f)
    fp = tuple(c.d_phi() for c in f)
    lr, lp = system.ell_i(i)
    x0 = system.phase_frac(i, N, rho, phi)
    x = Jet.affine(x0, N * lr, N * lp, m)
    parts = corrugation_kernel(fr, fp, ladder_jet(k, rho, m), i, x, N, system)
    f_new = tuple(a.truncate(m) + b for a, b in zip(f, parts["disp"]))
    data = measure_stage(k, i, N, rho, phi, _values(f), _values(f_new), _gradients(f),
                         _gradients(f_new), metric_ladder(k, rho), system,
                         parts=_value_parts(parts), x=x0)
    return f_new, data


def _concat_stage(parts):
    first = parts[0]
    if len(parts) == 1:
        return first

    def cat(name):
        return np.concatenate([getattr(p, name) for p in parts])

    frame = Frame3(*(np.concatenate([getattr(p.frame_prev, a) for p in parts])
                     for a in ("t", "w", "n")))
    data = StageData(first.k, first.i, first.N, cat("rho"), cat("phi"), cat("f_prev"), cat("f"),
                     cat("df_prev"), cat("df"), cat("L"), cat("eta"), cat("alpha"), cat("X"),
                     cat("theta"), cat("err_field"), frame)
    reps = [p.report for p in parts]
    data.report = StepReport(
        first.k, first.i, first.N, max(r.err for r in reps), min(r.eta_min for r in reps),
        max(r.alpha_max for r in reps), max(r.X_max for r in reps),
        min(r.lambda_min for r in reps))
    return data


@dataclass
class ExactLayer:
    """Values and differential of one layer at the sample points."""

    stage: tuple
    f: np.ndarray
    df: np.ndarray


class ExactEngine:
    """Layer-by-layer exact evaluation at a fixed set of sample points.

    ``steps`` is the number of corrugation steps that will be applied; the
    initial jets get order steps + 1 so every layer keeps an exact first
    differential.
    """

    def __init__(self, rho, phi, steps, system=WAVEFRONTS, chunk=CHUNK):
        rho, phi = np.broadcast_arrays(np.asarray(rho, dtype=float), np.asarray(phi, dtype=float))
        self.shape = rho.shape
        self.rho = rho.ravel().copy()
        self.phi = phi.ravel().copy()
        self.system = system
        self.steps = int(steps)
        self._bounds = [(s, min(s + chunk, self.rho.size)) for s in range(0, self.rho.size, chunk)]
        self._jets = [f0_jet(self.rho[a:b], self.phi[a:b], self.steps + 1) for a, b in self._bounds]
        self.history = ()
        self.layers = [ExactLayer((0, 0), self._cat(_values), self._cat(_gradients))]

    def _cat(self, fn, jets=None):
        jets = self._jets if jets is None else jets
        return np.concatenate([fn(f) for f in jets])

    @property
    def remaining(self):
        return self.steps - len(self.history)

    def current(self):
        return self.layers[-1]

    def trial(self, k, i, N):
        """Measure one step without committing it; returns (StageData, token)."""
        if self.remaining <= 0:
            raise ConfigurationError("no jet order left: the engine was sized for fewer steps")
        new_jets, datas = [], []
        for (a, b), f in zip(self._bounds, self._jets):
            fn, data = _step_chunk(f, self.rho[a:b], self.phi[a:b], k, i, N, self.system)
            new_jets.append(fn)
            datas.append(data)
        return _concat_stage(datas), ((k, i, N), new_jets)

    def commit(self, token):
        layer, jets = token
        self._jets = jets
        self.history = self.history + (layer,)
        self.layers.append(ExactLayer(layer[:2], self._cat(_values), self._cat(_gradients)))

    def step(self, k, i, N):
        data, token = self.trial(k, i, N)
        self.commit(token)
        return data


def exact_run(rho, phi, stages, system=WAVEFRONTS, chunk=CHUNK):
    """Evaluate every layer of a fixed schedule at the points (rho, phi).

    stages : sequence of (k, i, N) in process order.
    Returns (layers, stage_data): layers[0] is f0, layers[s] the map after
    stage s; stage_data[s-1] holds the measurements of stage s.
    """
    stages = [tuple(s) for s in stages]
    engine = ExactEngine(rho, phi, len(stages), system, chunk)
    datas = [engine.step(*s) for s in stages]
    return engine.layers, datas
