"""Point sets on the unit sphere and their Hausdorff distance."""
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError


@dataclass(frozen=True)
class SpherePointSet:
    points: np.ndarray
    source: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if pts.shape[0] == 0:
            raise DomainError("empty sphere point set")
        if np.max(np.abs(np.linalg.norm(pts, axis=-1) - 1.0)) > 1e-9:
            raise DomainError("sphere points must have unit norm")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]


def chord_to_angle(chord):
    return 2.0 * np.arcsin(np.clip(0.5 * np.asarray(chord), 0.0, 1.0))


def _directed(a, b):
    dist, _ = cKDTree(b).query(a, k=1)
    return float(chord_to_angle(np.max(dist)))


def hausdorff_sphere(a, b):
    """Symmetric Hausdorff distance between two finite sets, in great-circle radians.

    Nearest neighbours are found in the chordal metric, which is a monotone
    function of the angular one, so the result is exact for the samples.
    """
    pa = a.points if isinstance(a, SpherePointSet) else SpherePointSet(a).points
    pb = b.points if isinstance(b, SpherePointSet) else SpherePointSet(b).points
    return max(_directed(pa, pb), _directed(pb, pa))
