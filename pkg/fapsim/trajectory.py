"""FAP trajectories inside an intersection area.

A trajectory is a closed loop of :class:`Line` and :class:`Arc` segments at a
fixed altitude. Three kinds are built for every area (Circular, Inner Elliptic
and Elliptic, the last two being stadiums along the area's principal axis)
plus Hover for rotary-wing UAVs.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .energy_models import STRAIGHT, SampledPath, Straight, TrajectoryEnergy
from .errors import ValidationError
from .geometry import IntersectionArea

LOGGER = logging.getLogger(__name__)

CLOSURE_TOLERANCE = 1e-6
# A hover has no lap, so its default trace spans this many seconds.
HOVER_TRACE_SECONDS = 1.0
# Outline points tested per grid cell when stretching the Elliptic stadium.
_OUTLINE_SAMPLES_PER_CELL = 4
# Straights shorter than this many cells collapse the Elliptic stadium to a circle.
_MIN_STRAIGHT_CELLS = 2

Point = Tuple[float, float]


class TrajectoryKind(str, enum.Enum):
    """Trajectory kinds, declared in tie-break order."""

    CIRCULAR = "circular"
    INNER_ELLIPTIC = "inner_elliptic"
    ELLIPTIC = "elliptic"
    HOVER = "hover"

    @property
    def rank(self) -> int:
        return list(TrajectoryKind).index(self)


def _as_point(p: Sequence[float]) -> Point:
    return (float(p[0]), float(p[1]))


@dataclass(frozen=True)
class Line:
    p0: Point
    p1: Point
    speed: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "p0", _as_point(self.p0))
        object.__setattr__(self, "p1", _as_point(self.p1))

    @property
    def radius(self) -> Straight:
        return STRAIGHT

    @property
    def length(self) -> float:
        return math.hypot(self.p1[0] - self.p0[0], self.p1[1] - self.p0[1])

    @property
    def start(self) -> np.ndarray:
        return np.array(self.p0)

    @property
    def end(self) -> np.ndarray:
        return np.array(self.p1)

    def direction(self) -> np.ndarray:
        return (self.end - self.start) / self.length

    def tangent_at(self, s: np.ndarray) -> np.ndarray:
        s = np.atleast_1d(s)
        return np.tile(self.direction(), (s.size, 1))

    def position_at(self, s: np.ndarray) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return self.start + s[:, None] * self.direction()

    def acceleration_at(self, s: np.ndarray, speed: float) -> np.ndarray:
        return np.zeros((np.atleast_1d(s).size, 2))

    def with_speed(self, speed: float) -> "Line":
        return replace(self, speed=speed)


@dataclass(frozen=True)
class Arc:
    """Circular arc from ``start_angle`` to ``end_angle`` (radians); ``ccw`` gives the sense."""

    center: Point
    radius: float
    start_angle: float
    end_angle: float
    ccw: bool = True
    speed: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "center", _as_point(self.center))
        if not math.isfinite(self.radius) or self.radius <= 0:
            raise ValidationError(f"arc radius must be positive, got {self.radius!r}")

    @property
    def sweep(self) -> float:
        return abs(self.end_angle - self.start_angle)

    @property
    def length(self) -> float:
        return self.radius * self.sweep

    @property
    def _sign(self) -> float:
        return 1.0 if self.ccw else -1.0

    def _angles(self, s: np.ndarray) -> np.ndarray:
        return self.start_angle + self._sign * np.atleast_1d(np.asarray(s, dtype=float)) / self.radius

    def position_at(self, s: np.ndarray) -> np.ndarray:
        theta = self._angles(s)
        return np.column_stack(
            (self.center[0] + self.radius * np.cos(theta), self.center[1] + self.radius * np.sin(theta))
        )

    def tangent_at(self, s: np.ndarray) -> np.ndarray:
        theta = self._angles(s)
        return self._sign * np.column_stack((-np.sin(theta), np.cos(theta)))

    def acceleration_at(self, s: np.ndarray, speed: float) -> np.ndarray:
        theta = self._angles(s)
        return -(speed**2 / self.radius) * np.column_stack((np.cos(theta), np.sin(theta)))

    @property
    def start(self) -> np.ndarray:
        return self.position_at(0.0)[0]

    @property
    def end(self) -> np.ndarray:
        return self.position_at(self.length)[0]

    def with_speed(self, speed: float) -> "Arc":
        return replace(self, speed=speed)


Segment = Union[Line, Arc]


@dataclass(frozen=True)
class Trajectory:
    kind: TrajectoryKind
    segments: Tuple[Segment, ...]
    center: Point
    altitude: float = 6.0

    def __post_init__(self):
        object.__setattr__(self, "center", _as_point(self.center))
        object.__setattr__(self, "segments", tuple(self.segments))
        if self.kind is TrajectoryKind.HOVER:
            if self.segments:
                raise ValidationError("a hover trajectory has no segments")
            return
        if not self.segments:
            raise ValidationError(f"{self.kind.value} trajectory needs at least one segment")
        for seg in self.segments:
            if seg.length <= 0:
                raise ValidationError(f"{self.kind.value} trajectory has a zero-length segment")
        if not self.is_closed():
            raise ValidationError(f"{self.kind.value} trajectory is not a closed loop")

    @property
    def is_hover(self) -> bool:
        return self.kind is TrajectoryKind.HOVER

    @property
    def length(self) -> float:
        return sum(seg.length for seg in self.segments)

    @property
    def arc_radii(self) -> Tuple[float, ...]:
        return tuple(seg.radius for seg in self.segments if isinstance(seg, Arc))

    def is_closed(self, tolerance: float = CLOSURE_TOLERANCE) -> bool:
        ends = [seg.end for seg in self.segments]
        starts = [seg.start for seg in self.segments[1:]] + [self.segments[0].start]
        return all(np.linalg.norm(e - s) <= tolerance for e, s in zip(ends, starts))

    def with_segments(self, segments: Tuple[Segment, ...]) -> "Trajectory":
        return replace(self, segments=tuple(segments))

    def position_at(self, distance: Union[float, np.ndarray]) -> np.ndarray:
        """Ground positions (N, 2) at arc-length ``distance`` along the loop, wrapping each lap."""
        d = np.atleast_1d(np.asarray(distance, dtype=float))
        if self.is_hover:
            return np.tile(np.array(self.center), (d.size, 1))
        lengths = np.array([seg.length for seg in self.segments])
        offsets = np.concatenate(([0.0], np.cumsum(lengths)))
        d = np.mod(d, offsets[-1])
        index = np.clip(np.searchsorted(offsets, d, side="right") - 1, 0, len(self.segments) - 1)
        out = np.empty((d.size, 2))
        for i, seg in enumerate(self.segments):
            mask = index == i
            if mask.any():
                out[mask] = seg.position_at(d[mask] - offsets[i])
        return out


#############################################
# Builders
#############################################


def hover(center: Sequence[float], altitude: float = 6.0) -> Trajectory:
    return Trajectory(TrajectoryKind.HOVER, (), _as_point(center), altitude)


def circle(
    center: Sequence[float], radius: float, kind: TrajectoryKind, altitude: float = 6.0
) -> Trajectory:
    """Full counter-clockwise circle starting at angle 0."""
    arc = Arc(_as_point(center), radius, 0.0, 2 * math.pi, ccw=True)
    return Trajectory(kind, (arc,), _as_point(center), altitude)


def make_stadium(
    center: Sequence[float],
    axis: Sequence[float],
    arc_radius: float,
    straight_length: float,
    kind: TrajectoryKind,
    altitude: float = 6.0,
) -> Trajectory:
    """Counter-clockwise stadium: two lines of ``straight_length`` parallel to ``axis``
    joined by two half circles of ``arc_radius``."""
    if arc_radius <= 0 or straight_length <= 0:
        raise ValidationError("stadium needs a positive arc radius and straight length")
    c = np.asarray(center, dtype=float)
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    n = np.array([-a[1], a[0]])
    half = straight_length / 2
    right, left = c + half * a, c - half * a
    below = math.atan2(-n[1], -n[0])

    segments = (
        Line(left - arc_radius * n, right - arc_radius * n),
        Arc(_as_point(right), arc_radius, below, below + math.pi, ccw=True),
        Line(right + arc_radius * n, left + arc_radius * n),
        Arc(_as_point(left), arc_radius, below + math.pi, below + 2 * math.pi, ccw=True),
    )
    return Trajectory(kind, segments, _as_point(c), altitude)


def build_circular(area: IntersectionArea) -> Trajectory:
    """Circle around the area's centroid with radius equal to the centroid-to-boundary distance.

    Areas narrower than the grid resolution degenerate to Hover at the centroid.
    """
    shape = area.shape
    if shape.min_dist < area.res:
        LOGGER.warning(
            "intersection area too small for a circular trajectory (%.2f m < %.2f m), hovering",
            shape.min_dist,
            area.res,
        )
        return hover(shape.centroid, area.altitude)
    return circle(shape.centroid, shape.min_dist, TrajectoryKind.CIRCULAR, area.altitude)


def build_inner_elliptic(area: IntersectionArea) -> Optional[Trajectory]:
    """Stadium inscribed in the circular trajectory's disc, or ``None`` when its arcs
    would be tighter than the grid resolution."""
    shape = area.shape
    r_c = shape.min_dist
    arc_radius = r_c / 2
    if arc_radius < area.res:
        return None
    return make_stadium(
        shape.centroid, shape.principal_axis, arc_radius, r_c, TrajectoryKind.INNER_ELLIPTIC, area.altitude
    )


def _axial_extent(area: IntersectionArea, direction: float) -> float:
    """Largest offset ``s`` along ``direction * axis`` for which the half stadium swept
    from the centroid, with arcs of radius ``r_c``, stays inside the area."""
    shape = area.shape
    r_c = shape.min_dist
    axis = direction * shape.principal_axis
    normal = np.array([-axis[1], axis[0]])
    spacing = area.res / _OUTLINE_SAMPLES_PER_CELL
    theta = np.linspace(-np.pi / 2, np.pi / 2, max(int(np.ceil(np.pi * r_c / spacing)), 2) + 1)
    cap = r_c * (np.cos(theta)[:, None] * axis + np.sin(theta)[:, None] * normal)

    def fits(s: float) -> bool:
        t = np.linspace(0.0, s, max(int(np.ceil(s / spacing)), 1) + 1)[:, None]
        along = shape.centroid + t * axis
        outline = np.vstack([along[-1] + cap, along + r_c * normal, along - r_c * normal])
        return bool(area.contains(outline).all())

    if not fits(0.0):
        return 0.0
    reach = float(np.ptp(area.points, axis=0).max()) + area.res
    step = area.res / 4
    lo = 0.0
    hi = step
    while hi <= reach and fits(hi):
        lo, hi = hi, hi + step
    while hi - lo > step / 8:
        mid = (lo + hi) / 2
        if fits(mid):
            lo = mid
        else:
            hi = mid
    return lo


def build_elliptic(area: IntersectionArea) -> Optional[Trajectory]:
    """Stadium with arcs of the circular radius, stretched along the principal axis as far
    as the area allows and recentred on the feasible axial extent.

    Returns ``None`` when the area is too small for a circular trajectory. When no
    stretch is possible the result is a full circle of kind Elliptic.
    """
    shape = area.shape
    r_c = shape.min_dist
    if r_c < area.res:
        return None
    s_hi = _axial_extent(area, 1.0)
    s_lo = -_axial_extent(area, -1.0)
    straight = s_hi - s_lo
    if straight < _MIN_STRAIGHT_CELLS * area.res:
        return circle(shape.centroid, r_c, TrajectoryKind.ELLIPTIC, area.altitude)
    center = shape.centroid + ((s_hi + s_lo) / 2) * shape.principal_axis
    LOGGER.debug("elliptic stadium: arc radius %.2f m, straight length %.2f m", r_c, straight)
    return make_stadium(
        center, shape.principal_axis, r_c, straight, TrajectoryKind.ELLIPTIC, area.altitude
    )


def fixed_wing_feasible(trajectory: Trajectory, r_min: float) -> bool:
    """False for Hover and for any arc tighter than ``r_min``."""
    if trajectory.is_hover:
        return False
    return all(radius >= r_min for radius in trajectory.arc_radii)


#############################################
# Sampling
#############################################


def sample_path(
    flight: TrajectoryEnergy, duration: Optional[float] = None, dt: float = 0.1
) -> Tuple[SampledPath, np.ndarray]:
    """Sample a speed-annotated trajectory every ``dt`` seconds for ``duration`` seconds.

    ``duration`` defaults to one lap, or to :data:`HOVER_TRACE_SECONDS` for Hover, and
    is always the last timestamp. Returns the sampled path and the constant altitude
    column. Speed changes at segment junctions are instantaneous.
    """
    if dt <= 0:
        raise ValidationError(f"sampling interval must be positive, got {dt}")
    trajectory = flight.trajectory
    if duration is None:
        duration = HOVER_TRACE_SECONDS if trajectory.is_hover else flight.lap_time
    if duration < 0:
        raise ValidationError(f"duration must be non-negative, got {duration}")

    t = np.arange(int(math.floor(duration / dt + 1e-9)) + 1) * dt
    if duration - t[-1] > 1e-9:
        # the final sample always lands on ``duration``
        t = np.append(t, duration)
    count = t.size
    altitude = np.full(count, trajectory.altitude)
    if trajectory.is_hover:
        position = np.tile(np.array(trajectory.center), (count, 1))
        zeros = np.zeros((count, 2))
        return SampledPath(t, position, zeros, zeros.copy()), altitude

    durations = np.array([seg.length / seg.speed for seg in trajectory.segments])
    offsets = np.concatenate(([0.0], np.cumsum(durations)))
    lap_t = np.mod(t, offsets[-1])
    index = np.clip(np.searchsorted(offsets, lap_t, side="right") - 1, 0, len(durations) - 1)

    position = np.empty((count, 2))
    velocity = np.empty((count, 2))
    acceleration = np.empty((count, 2))
    for i, seg in enumerate(trajectory.segments):
        mask = index == i
        if not mask.any():
            continue
        s = np.minimum((lap_t[mask] - offsets[i]) * seg.speed, seg.length)
        position[mask] = seg.position_at(s)
        velocity[mask] = seg.speed * seg.tangent_at(s)
        acceleration[mask] = seg.acceleration_at(s, seg.speed)
    return SampledPath(t, position, velocity, acceleration), altitude
