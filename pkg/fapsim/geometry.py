"""Feasible FAP placement areas.

Coverage spheres around ground users are cut at the FAP altitude into discs,
the discs are intersected on a square lattice anchored at the origin, and
overlaps with areas of earlier groups are removed. Cells are stored as integer
lattice indices so areas built independently can be compared exactly.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import ValidationError

LOGGER = logging.getLogger(__name__)

Point = Tuple[float, float]

# Packs (i, j) lattice indices into one int64 key.
_KEY_OFFSET = 1 << 30
_KEY_SHIFT = 1 << 31


@dataclass(frozen=True)
class Bounds:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    @property
    def is_empty(self) -> bool:
        return self.xmin > self.xmax or self.ymin > self.ymax

    def intersect(self, other: "Bounds") -> "Bounds":
        return Bounds(
            max(self.xmin, other.xmin),
            max(self.ymin, other.ymin),
            min(self.xmax, other.xmax),
            min(self.ymax, other.ymax),
        )


@dataclass(frozen=True)
class CoverageDisc:
    """Horizontal cut of a GU's coverage sphere at the FAP altitude."""

    center: Point
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValidationError(f"disc radius must be non-negative, got {self.radius}")

    @property
    def bounds(self) -> Bounds:
        x, y = self.center
        return Bounds(x - self.radius, y - self.radius, x + self.radius, y + self.radius)


def sphere_to_disc(
    gu: Sequence[float], d_max: float, fap_altitude: float
) -> Optional[CoverageDisc]:
    """Cut the sphere of radius ``d_max`` around ``gu`` (x, y, z) at ``fap_altitude``.

    Returns ``None`` when the sphere does not reach the altitude plane.
    """
    if d_max < 0:
        raise ValidationError(f"sphere radius must be non-negative, got {d_max}")
    dz = fap_altitude - gu[2]
    if d_max < abs(dz):
        return None
    return CoverageDisc((float(gu[0]), float(gu[1])), math.sqrt(d_max**2 - dz**2))


def _keys(cells: np.ndarray) -> np.ndarray:
    return (cells[:, 0] + _KEY_OFFSET) * _KEY_SHIFT + (cells[:, 1] + _KEY_OFFSET)


@dataclass(frozen=True, eq=False)
class IntersectionArea:
    """Set of lattice cells (spacing ``res``) at ``altitude`` where a FAP may be placed.

    ``cells`` is an (k, 2) integer array of lattice indices, sorted; cell (i, j)
    has its center at (i * res, j * res).
    """

    cells: np.ndarray
    res: float
    altitude: float

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.int64).reshape(-1, 2)
        if cells.size:
            cells = np.unique(cells, axis=0)
        object.__setattr__(self, "cells", cells)

    @classmethod
    def empty(cls, res: float, altitude: float) -> "IntersectionArea":
        return cls(np.empty((0, 2), dtype=np.int64), res, altitude)

    @property
    def is_empty(self) -> bool:
        return len(self.cells) == 0

    @property
    def cell_count(self) -> int:
        return len(self.cells)

    @property
    def area(self) -> float:
        return self.cell_count * self.res**2

    @property
    def points(self) -> np.ndarray:
        return self.cells * self.res

    @functools.cached_property
    def keys(self) -> np.ndarray:
        return _keys(self.cells)

    @functools.cached_property
    def shape(self) -> "AreaShape":
        return centroid_and_boundary(self)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """True for each point whose nearest lattice cell belongs to the area."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.is_empty:
            return np.zeros(len(pts), dtype=bool)
        wanted = _keys(np.rint(pts / self.res).astype(np.int64))
        # cells are sorted row-major, so their keys are sorted too
        idx = np.minimum(np.searchsorted(self.keys, wanted), self.cell_count - 1)
        return self.keys[idx] == wanted


def intersect_discs(
    discs: Sequence[Optional[CoverageDisc]],
    area_bounds: Optional[Bounds] = None,
    res: float = 1.0,
    altitude: float = 6.0,
) -> IntersectionArea:
    """Rasterise the intersection of ``discs`` on the lattice of spacing ``res``.

    A cell belongs to the result when its center lies inside every disc and
    inside ``area_bounds`` (when given). An empty result signals an infeasible group.
    """
    if res <= 0:
        raise ValidationError(f"grid resolution must be positive, got {res}")
    if not discs or any(disc is None for disc in discs):
        return IntersectionArea.empty(res, altitude)

    window = functools.reduce(Bounds.intersect, (disc.bounds for disc in discs))
    if area_bounds is not None:
        window = window.intersect(area_bounds)
    if window.is_empty:
        return IntersectionArea.empty(res, altitude)

    i_range = np.arange(math.ceil(window.xmin / res - 1e-9), math.floor(window.xmax / res + 1e-9) + 1)
    j_range = np.arange(math.ceil(window.ymin / res - 1e-9), math.floor(window.ymax / res + 1e-9) + 1)
    if i_range.size == 0 or j_range.size == 0:
        return IntersectionArea.empty(res, altitude)
    ii, jj = np.meshgrid(i_range, j_range, indexing="ij")
    xs, ys = ii * res, jj * res
    inside = np.ones(ii.shape, dtype=bool)
    for disc in discs:
        cx, cy = disc.center
        inside &= (xs - cx) ** 2 + (ys - cy) ** 2 <= disc.radius**2 + 1e-9
    cells = np.column_stack((ii[inside], jj[inside]))
    return IntersectionArea(cells, res, altitude)


def subtract_overlaps(
    area: IntersectionArea, earlier: Iterable[IntersectionArea]
) -> IntersectionArea:
    """Remove from ``area`` every cell already claimed by an earlier area."""
    keep = np.ones(area.cell_count, dtype=bool)
    for other in earlier:
        if other.is_empty or area.is_empty:
            continue
        if not math.isclose(other.res, area.res):
            raise ValidationError("cannot subtract areas rasterised at different resolutions")
        keep &= ~np.isin(area.keys, other.keys)
    if keep.all():
        return area
    removed = int((~keep).sum())
    LOGGER.debug("removed %d overlapping cells (%d left)", removed, int(keep.sum()))
    return IntersectionArea(area.cells[keep], area.res, area.altitude)


@dataclass(frozen=True, eq=False)
class AreaShape:
    """Centroid, boundary and orientation of an intersection area."""

    centroid: np.ndarray
    boundary: np.ndarray  # (m, 2) boundary cell centers ordered by angle around the centroid
    min_dist: float
    principal_axis: np.ndarray


def _boundary_mask(cells: np.ndarray) -> np.ndarray:
    lo = cells.min(axis=0)
    dims = cells.max(axis=0) - lo + 1
    mask = np.zeros(dims + 2, dtype=bool)
    mask[cells[:, 0] - lo[0] + 1, cells[:, 1] - lo[1] + 1] = True
    open_side = (
        ~mask[:-2, 1:-1] | ~mask[2:, 1:-1] | ~mask[1:-1, :-2] | ~mask[1:-1, 2:]
    ) & mask[1:-1, 1:-1]
    return open_side[cells[:, 0] - lo[0], cells[:, 1] - lo[1]]


def _principal_axis(points: np.ndarray) -> np.ndarray:
    if len(points) < 2:
        return np.array([1.0, 0.0])
    cov = np.cov(points, rowvar=False)
    eigvals, eigvecs = np.linalg.eigh(cov)
    axis = eigvecs[:, int(np.argmax(eigvals))]
    # Canonical sign so identical areas give identical trajectories.
    if axis[0] < -1e-12 or (abs(axis[0]) <= 1e-12 and axis[1] < 0):
        axis = -axis
    return axis / np.linalg.norm(axis)


def centroid_and_boundary(area: IntersectionArea) -> AreaShape:
    """Centroid, boundary cells, centroid-to-boundary distance and principal axis."""
    if area.is_empty:
        raise ValidationError("cannot compute the shape of an empty intersection area")
    points = area.points
    centroid = points.mean(axis=0)
    boundary = points[_boundary_mask(area.cells)]
    offsets = boundary - centroid
    order = np.lexsort((np.hypot(offsets[:, 0], offsets[:, 1]), np.arctan2(offsets[:, 1], offsets[:, 0])))
    boundary = boundary[order]
    min_dist, _ = cKDTree(boundary).query(centroid)
    return AreaShape(centroid, boundary, float(min_dist), _principal_axis(points))
