"""Embeddedness diagnostics: amplitude, X and immersion margins, and a
spatial-hash scan for self-intersections of the sampled surface."""
from dataclasses import dataclass
from math import pi

import numpy as np

from ..specfun import SIGMA

STENCIL = 2  # pairs within a 5x5 parameter stencil are exempt


@dataclass(frozen=True)
class CollisionScan:
    cell: float
    candidates: int
    collisions: int
    min_distance: float
    worst_pair: tuple

    @property
    def clean(self):
        return self.collisions == 0


@dataclass(frozen=True)
class EmbeddingDiagnostics:
    alpha_max: float
    X_max: float
    lambda_min: float
    lambda_floor: float
    alpha_ok: bool
    X_ok: bool
    lambda_ok: bool
    scan: CollisionScan

    @property
    def all_ok(self):
        return self.alpha_ok and self.X_ok and self.lambda_ok and self.scan.clean

    def as_dict(self):
        return {"alpha_max": self.alpha_max, "alpha_ok": self.alpha_ok,
                "X_max": self.X_max, "X_ok": self.X_ok,
                "lambda_min": self.lambda_min, "lambda_floor": self.lambda_floor,
                "lambda_ok": self.lambda_ok, "collisions": self.scan.collisions,
                "min_offstencil_distance": self.scan.min_distance, "cell": self.scan.cell}


def _edge_lengths(nodes):
    along_rho = np.linalg.norm(np.diff(nodes, axis=0), axis=-1)
    along_phi = np.linalg.norm(np.roll(nodes, -1, axis=1) - nodes, axis=-1)
    return along_rho, along_phi


def _pairs_in_neighbour_cells(keys_xyz):
    """All index pairs (a, b), a < b, whose hash cells touch (27-neighbourhood)."""
    lo = keys_xyz.min(axis=0) - 1
    span = keys_xyz.max(axis=0) - lo + 2
    def encode(k):
        return (k[..., 0] - lo[0]) * (span[1] * span[2]) + (k[..., 1] - lo[1]) * span[2] + (k[..., 2] - lo[2])
    keys = encode(keys_xyz)
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    firsts, seconds = [], []
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dz in (-1, 0, 1):
                target = encode(keys_xyz + np.array([dx, dy, dz]))
                start = np.searchsorted(sorted_keys, target, "left")
                stop = np.searchsorted(sorted_keys, target, "right")
                counts = stop - start
                if not counts.any():
                    continue
                a = np.repeat(np.arange(keys.size), counts)
                offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
                b = order[np.repeat(start, counts) + offsets]
                keep = a < b
                firsts.append(a[keep])
                seconds.append(b[keep])
    if not firsts:
        return np.zeros(0, int), np.zeros(0, int)
    return np.concatenate(firsts), np.concatenate(seconds)


def self_intersection_scan(nodes, stencil=STENCIL):
    """Minimum-distance scan over a periodic (n_rho, n_phi, 3) node array.

    Two samples collide when they lie closer than half the shortest mesh
    edge while being more than ``stencil`` steps apart in either parameter
    direction (phi distance measured cyclically).
    """
    nodes = np.asarray(nodes, dtype=float)
    n_rho, n_phi, _ = nodes.shape
    er, ep = _edge_lengths(nodes)
    cell = 0.5 * float(min(er.min(), ep.min()))
    flat = nodes.reshape(-1, 3)
    keys = np.floor(flat / cell).astype(np.int64)
    a, b = _pairs_in_neighbour_cells(keys)
    ia, ja = np.divmod(a, n_phi)
    ib, jb = np.divmod(b, n_phi)
    dj = np.abs(ja - jb)
    dj = np.minimum(dj, n_phi - dj)
    off = (np.abs(ia - ib) > stencil) | (dj > stencil)
    a, b = a[off], b[off]
    dist = np.linalg.norm(flat[a] - flat[b], axis=-1)
    hits = dist < cell
    if dist.size:
        w = int(np.argmin(dist))
        worst = (divmod(int(a[w]), n_phi), divmod(int(b[w]), n_phi))
        dmin = float(dist[w])
    else:
        worst, dmin = (), float("inf")
    return CollisionScan(cell, int(off.sum()), int(hits.sum()), dmin, worst)


def lambda_floor(rho0):
    """Half of lambda_C(df0) = min(2 rho0, 2 sqrt(1 + 2 rho0^2)) / 2."""
    return min(2.0 * rho0, 2.0 * np.sqrt(1.0 + 2.0 * rho0 * rho0)) / 2.0


def embedding_diagnostics(grid, reports, lambda_min=None):
    """Embeddedness flags for a grid and the StepReports that produced it.

    ``reports`` may be one StepReport or a sequence of them; maxima and minima
    are taken over all.  ``lambda_min`` overrides the reported immersion
    margin (for instance the minimum over a whole run).
    """
    if not isinstance(reports, (list, tuple)):
        reports = [reports]
    rho0 = float(grid.rho_axis[0])
    floor = lambda_floor(rho0)
    a_max = max((r.alpha_max for r in reports), default=0.0)
    x_max = max((r.X_max for r in reports), default=0.0)
    if lambda_min is None:
        lambda_min = min((r.lambda_min for r in reports), default=2.0 * floor)
    scan = self_intersection_scan(grid.full_nodes())
    return EmbeddingDiagnostics(a_max, x_max, float(lambda_min), floor,
                                a_max < pi / 2, x_max < SIGMA, lambda_min >= floor, scan)
