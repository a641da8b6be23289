"""Structured (rho, phi) grids of surface points and their discrete differentials.

A grid covers the annulus rho0 <= rho <= rho1 and the full circle of
``phi_count`` uniform angles.  When the maps involved are invariant under the
rotation by 2 pi / symmetry (which holds for every layer of the process when
``symmetry`` divides 7 L), only the first ``phi_count // symmetry`` columns are
stored; column j + phi_count // symmetry is the stored column j rotated about
the vertical axis.
"""
from dataclasses import dataclass, field, replace
from math import pi

import numpy as np

from ..errors import ConfigurationError, ResolutionError
from ..metrics import A_SLOPE, SymForm2

MIN_SAMPLES_PER_PERIOD = 12


def rotation_z(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class GridSpec:
    """Sampling of the annulus.

    ``phi_multiple`` is 7 L for the schedule the grid is meant for; the angular
    sample count must be a multiple of it.  ``sector`` stores a single
    fundamental sector of angular width 2 pi / phi_multiple.
    """

    rho0: float
    n_rho: int
    phi_count: int
    rho1: float = 1.0
    phi_multiple: int = 7
    sector: bool = True

    def validate(self):
        if not (0.0 < self.rho0 < self.rho1 <= 1.0):
            raise ConfigurationError("need 0 < rho0 < rho1 <= 1")
        if self.n_rho < 5:
            raise ConfigurationError("need at least 5 radial samples")
        if self.phi_count <= 0 or self.phi_count % self.phi_multiple:
            raise ConfigurationError(
                f"phi_count={self.phi_count} is not a multiple of 7L={self.phi_multiple}")
        if self.stored_columns < 4:
            raise ConfigurationError("a stored sector needs at least 4 angular samples")
        return self

    @property
    def symmetry(self):
        return self.phi_multiple if self.sector else 1

    @property
    def stored_columns(self):
        return self.phi_count // self.symmetry

    def rho_axis(self):
        return np.linspace(self.rho0, self.rho1, self.n_rho)


@dataclass(frozen=True)
class FieldGrid:
    nodes: np.ndarray
    rho_axis: np.ndarray
    phi_count: int
    symmetry: int = 1
    layer: tuple = (0, 0)
    history: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not np.all(np.isfinite(self.nodes)):
            raise ConfigurationError("grid contains non-finite nodes")

    @property
    def n_rho(self):
        return self.nodes.shape[0]

    @property
    def stored_columns(self):
        return self.nodes.shape[1]

    @property
    def sector_angle(self):
        return 2.0 * pi / self.symmetry

    @property
    def rho_step(self):
        return float(self.rho_axis[1] - self.rho_axis[0])

    @property
    def phi_step(self):
        return 2.0 * pi / self.phi_count

    @property
    def phi_axis(self):
        return self.phi_step * np.arange(self.stored_columns)

    def mesh_coords(self):
        return np.meshgrid(self.rho_axis, self.phi_axis, indexing="ij")

    def column(self, j):
        """Node column with wraparound: j may be any integer."""
        m = self.stored_columns
        sector, local = divmod(int(j), m)
        col = self.nodes[:, local]
        sector %= self.symmetry
        if sector == 0:
            return col
        return col @ rotation_z(sector * self.sector_angle).T

    def columns(self, start, stop):
        return np.stack([self.column(j) for j in range(start, stop)], axis=1)

    def full_nodes(self):
        """All phi_count columns, shape (n_rho, phi_count, 3)."""
        if self.symmetry == 1:
            return self.nodes
        parts = [self.nodes @ rotation_z(s * self.sector_angle).T for s in range(self.symmetry)]
        return np.concatenate(parts, axis=1)

    def full_phi_axis(self):
        return self.phi_step * np.arange(self.phi_count)

    def with_nodes(self, nodes, layer, history):
        return replace(self, nodes=nodes, layer=layer, history=history)


@dataclass(frozen=True)
class DiffField:
    """Discrete differential: partial derivatives along rho and phi at each node."""

    d_rho: np.ndarray
    d_phi: np.ndarray
    method: str = "fd4"

    def matrices(self):
        """LinMap23 field, shape (..., 3, 2)."""
        return np.stack([self.d_rho, self.d_phi], axis=-1)

    def apply(self, v):
        return v[0] * self.d_rho + v[1] * self.d_phi


def initial_embedding(spec):
    """Sample f0(rho, phi) = 2 (rho cos phi, rho sin phi, rho^2 / sqrt 2)."""
    spec.validate()
    rho = spec.rho_axis()
    phi = 2.0 * pi / spec.phi_count * np.arange(spec.stored_columns)
    nodes = f0_points(*np.meshgrid(rho, phi, indexing="ij"))
    return FieldGrid(nodes, rho, spec.phi_count, spec.symmetry, (0, 0), ())


def f0_points(rho, phi):
    rho = np.asarray(rho, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return 2.0 * np.stack([rho * np.cos(phi), rho * np.sin(phi),
                           np.sqrt(0.5) * rho * rho], axis=-1)


def f0_differential(rho, phi):
    """Analytic partials (f_rho, f_phi) of the initial embedding."""
    rho = np.asarray(rho, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c, s = np.cos(phi), np.sin(phi)
    fr = 2.0 * np.stack([c, s, np.sqrt(2.0) * rho], axis=-1)
    fp = 2.0 * np.stack([-rho * s, rho * c, np.zeros_like(rho)], axis=-1)
    return fr, fp


def check_resolution(grid, layers, a=A_SLOPE, minimum=MIN_SAMPLES_PER_PERIOD):
    """Raise ResolutionError if a corrugation layer has too few samples per period."""
    h_rho = grid.rho_step
    h_phi = grid.phi_step
    for (k, i, N) in layers:
        along_rho = 1.0 / (N * h_rho)
        if along_rho < minimum:
            raise ResolutionError(
                f"layer ({k},{i}) with N={N}: {along_rho:.1f} radial samples per period "
                f"(need {minimum})", layer=(k, i))
        if i in (2, 3):
            along_phi = 1.0 / (a * N * h_phi)
            if along_phi < minimum:
                raise ResolutionError(
                    f"layer ({k},{i}) with N={N}: {along_phi:.1f} angular samples per period "
                    f"(need {minimum})", layer=(k, i))


def _d_rho(nodes, h):
    out = np.empty_like(nodes)
    out[2:-2] = (-nodes[4:] + 8.0 * nodes[3:-1] - 8.0 * nodes[1:-3] + nodes[:-4]) / (12.0 * h)
    out[1] = (nodes[2] - nodes[0]) / (2.0 * h)
    out[-2] = (nodes[-1] - nodes[-3]) / (2.0 * h)
    out[0] = (-3.0 * nodes[0] + 4.0 * nodes[1] - nodes[2]) / (2.0 * h)
    out[-1] = (3.0 * nodes[-1] - 4.0 * nodes[-2] + nodes[-3]) / (2.0 * h)
    return out


def _d_phi(grid):
    m = grid.stored_columns
    padded = np.concatenate([grid.columns(-2, 0), grid.nodes, grid.columns(m, m + 2)], axis=1)
    h = grid.phi_step
    return (-padded[:, 4:] + 8.0 * padded[:, 3:-1] - 8.0 * padded[:, 1:-3] + padded[:, :-4]) / (12.0 * h)


def differentiate(grid, extra_layers=()):
    """Fourth-order finite differences (second order one-sided at the rho ends)."""
    check_resolution(grid, tuple(grid.history) + tuple(extra_layers))
    steps = np.diff(grid.rho_axis)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise ConfigurationError("finite differences need a uniform radial axis")
    return DiffField(_d_rho(grid.nodes, grid.rho_step), _d_phi(grid), "fd4")


def pullback_of(df):
    return SymForm2(np.einsum("...k,...k->...", df.d_rho, df.d_rho),
                    np.einsum("...k,...k->...", df.d_rho, df.d_phi),
                    np.einsum("...k,...k->...", df.d_phi, df.d_phi))


def pullback_field(grid):
    """Induced metric E, F, G at every node, from the discrete differential."""
    return pullback_of(differentiate(grid))


def write_obj(path, grid):
    """Triangle mesh with phi-wraparound faces; vertices in row-major node order."""
    nodes = grid.full_nodes()
    nr, nphi, _ = nodes.shape
    idx = np.arange(nr * nphi).reshape(nr, nphi) + 1
    a = idx[:-1, :]
    b = idx[1:, :]
    c = np.roll(idx, -1, axis=1)[1:, :]
    d = np.roll(idx, -1, axis=1)[:-1, :]
    tris = np.stack([np.stack([a, b, c], -1), np.stack([a, c, d], -1)], axis=-2).reshape(-1, 3)
    with open(path, "w") as fh:
        fh.write("".join(f"v {x:.17g} {y:.17g} {z:.17g}\n" for x, y, z in nodes.reshape(-1, 3)))
        fh.write("".join(f"f {i} {j} {k}\n" for i, j, k in tris))
