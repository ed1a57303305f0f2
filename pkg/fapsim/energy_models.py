"""Propulsion power and energy models for rotary-wing and fixed-wing UAVs.

Two families of functions live here:

* closed-form power for constant-speed flight on a circle of radius ``r`` (or a
  straight line), used to pick per-segment optimal speeds and to evaluate
  trajectory energy;
* path integrators that evaluate the general trajectory energy from a sampled
  path ``q(t)``, used as oracles for the closed forms.

All functions are pure and operate on immutable parameter sets.
"""

from __future__ import annotations

import enum
import functools
import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Tuple, Union

import numpy as np
from scipy import integrate, optimize

from .errors import HoverNotPossibleError, InfeasibleRadiusError, ValidationError

if TYPE_CHECKING:  # pragma: no cover
    from .trajectory import Trajectory

LOGGER = logging.getLogger(__name__)

SECONDS_PER_HOUR = 3600.0


class Straight:
    """Radius of a straight segment (a turn radius approaching infinity)."""

    _instance: Optional["Straight"] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "STRAIGHT"

    def __reduce__(self):
        return (Straight, ())


STRAIGHT = Straight()

Radius = Union[float, Straight]


def parse_radius(value: Union[str, float, Straight]) -> Radius:
    """Normalise a user supplied radius; ``inf``/``straight`` map to :data:`STRAIGHT`."""
    if isinstance(value, Straight):
        return STRAIGHT
    if isinstance(value, str):
        token = value.strip().lower()
        if token in ("inf", "infinity", "straight", "line"):
            return STRAIGHT
        try:
            value = float(token)
        except ValueError as exc:
            raise ValidationError(f"invalid radius {value!r}") from exc
    radius = float(value)
    if math.isinf(radius) and radius > 0:
        return STRAIGHT
    _check_radius(radius)
    return radius


def _check_radius(r: Radius) -> None:
    if isinstance(r, Straight):
        return
    if not math.isfinite(r) or r <= 0:
        raise ValidationError(f"turn radius must be positive and finite, got {r!r}")


def _check_speed(v: float) -> None:
    if not math.isfinite(v) or v < 0:
        raise ValidationError(f"speed must be finite and non-negative, got {v!r}")


def _centrifugal_ratio(v: float, r: Radius, g: float) -> float:
    """Return V^4 / (r^2 g^2), i.e. (a_c / g)^2, zero on straight segments."""
    if isinstance(r, Straight):
        return 0.0
    return v**4 / (r**2 * g**2)


class UavType(str, enum.Enum):
    ROTARY = "rotary"
    FIXED = "fixed"


@dataclass(frozen=True)
class RotaryWingParams:
    """Coefficients of the rotary-wing power model.

    ``W_weight``, ``R``, ``Omega``, ``k`` and ``delta`` are kept for provenance only;
    ``P_b`` and ``P_ind`` are supplied directly.
    """

    P_b: float = 79.86
    P_ind: float = 88.63
    U_tip: float = 120.0
    v_0: float = 4.03
    d_0: float = 0.6
    s: float = 0.05
    rho: float = 1.225
    A: float = 0.503
    g: float = 9.8
    W_weight: float = 20.0
    R: float = 0.4
    Omega: float = 300.0
    k: float = 0.1
    delta: float = 0.012

    def __post_init__(self):
        # Hover powers may be zero (pure-parasite studies); everything else is physical.
        for name in ("P_b", "P_ind"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValidationError(f"rotary.{name} must be non-negative, got {value!r}")
        for name in ("U_tip", "v_0", "rho", "A", "g", "W_weight", "R", "Omega"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValidationError(f"rotary.{name} must be positive, got {value!r}")
        for name in ("d_0", "s", "k", "delta"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ValidationError(f"rotary.{name} must lie in (0, 1), got {value!r}")

    @property
    def equivalent_mass(self) -> float:
        """Mass used by the kinetic correction term, W / g."""
        return self.W_weight / self.g


@dataclass(frozen=True)
class FixedWingParams:
    """Coefficients of the fixed-wing power model."""

    c_1: float = 9.26e-4
    c_2: float = 2250.0
    g: float = 9.8
    r_min: float = 5.0
    mass: Optional[float] = None

    def __post_init__(self):
        for name in ("c_1", "c_2", "g", "r_min"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValidationError(f"fixed.{name} must be positive, got {value!r}")
        if self.mass is not None and (not math.isfinite(self.mass) or self.mass < 0):
            raise ValidationError(f"fixed.mass must be non-negative, got {self.mass!r}")


@dataclass(frozen=True)
class SpeedSearch:
    """Bounds and tolerance of the optimal-speed search, m/s."""

    lower: float = 0.1
    upper: float = 80.0
    tolerance: float = 1e-3

    def __post_init__(self):
        if not 0 < self.lower < self.upper:
            raise ValidationError(
                f"speed_search bounds must satisfy 0 < lower < upper, got [{self.lower}, {self.upper}]"
            )
        if self.tolerance <= 0:
            raise ValidationError(f"speed_search.tolerance must be positive, got {self.tolerance}")


def rotary_power(v: float, r: Radius, params: RotaryWingParams) -> float:
    """Rotary-wing power in W at speed ``v`` on a turn of radius ``r``.

    Sum of blade profile, induced and parasite terms; the centrifugal term
    vanishes on straight segments.
    """
    _check_speed(v)
    _check_radius(r)
    p = params
    centrifugal = _centrifugal_ratio(v, r, p.g)
    blade = p.P_b * (1 + 3 * v**2 / p.U_tip**2)
    induced_root = math.sqrt(1 + centrifugal + v**4 / (4 * p.v_0**4)) - v**2 / (2 * p.v_0**2)
    induced = p.P_ind * math.sqrt(1 + centrifugal) * math.sqrt(max(induced_root, 0.0))
    parasite = 0.5 * p.d_0 * p.rho * p.s * p.A * v**3
    return blade + induced + parasite


def rotary_hover_power(params: RotaryWingParams) -> float:
    """Hover power, the zero-speed case of :func:`rotary_power`."""
    return rotary_power(0.0, STRAIGHT, params)


def fixed_power(v: float, r: Radius, params: FixedWingParams) -> float:
    """Fixed-wing power in W at speed ``v`` on a turn of radius ``r``.

    Raises:
        HoverNotPossibleError: if ``v`` is not strictly positive.
    """
    if not math.isfinite(v):
        raise ValidationError(f"speed must be finite, got {v!r}")
    if v <= 0:
        raise HoverNotPossibleError(f"fixed-wing UAVs cannot fly at {v!r} m/s (no hovering)")
    _check_radius(r)
    p = params
    turn = 0.0 if isinstance(r, Straight) else p.c_2 / (p.g**2 * r**2)
    return (p.c_1 + turn) * v**3 + p.c_2 / v


@dataclass(frozen=True)
class RotaryWing:
    params: RotaryWingParams = field(default_factory=RotaryWingParams)

    uav_type = UavType.ROTARY
    can_hover = True

    @property
    def min_radius(self) -> float:
        return 0.0

    def power(self, v: float, r: Radius) -> float:
        return rotary_power(v, r, self.params)


@dataclass(frozen=True)
class FixedWing:
    params: FixedWingParams = field(default_factory=FixedWingParams)

    uav_type = UavType.FIXED
    can_hover = False

    @property
    def min_radius(self) -> float:
        return self.params.r_min

    def power(self, v: float, r: Radius) -> float:
        return fixed_power(v, r, self.params)


UavModel = Union[RotaryWing, FixedWing]


def check_radius_feasible(model: UavModel, r: Radius) -> None:
    """Raise :class:`InfeasibleRadiusError` when ``r`` is tighter than the model allows."""
    _check_radius(r)
    if isinstance(r, Straight):
        return
    if r < model.min_radius:
        raise InfeasibleRadiusError(r, model.min_radius)


def optimal_speed(
    model: UavModel, r: Radius, search: SpeedSearch = SpeedSearch()
) -> Tuple[float, float]:
    """Return ``(V_opt, P_min)`` minimising the model's power on radius ``r``.

    Power is unimodal in speed over the search bounds for both models, so a
    bounded scalar minimisation is enough.
    """
    check_radius_feasible(model, r)
    return _optimal_speed_cached(model, r, search)


@functools.lru_cache(maxsize=4096)
def _optimal_speed_cached(model: UavModel, r: Radius, search: SpeedSearch) -> Tuple[float, float]:
    result = optimize.minimize_scalar(
        lambda v: model.power(v, r),
        bounds=(search.lower, search.upper),
        method="bounded",
        options={"xatol": search.tolerance / 4},
    )
    v_opt = float(result.x)
    p_min = model.power(v_opt, r)
    LOGGER.debug("optimal speed %s r=%s: V=%.4f m/s P=%.4f W", model.uav_type.value, r, v_opt, p_min)
    return v_opt, p_min


def straight_line_optimum(model: UavModel, search: SpeedSearch = SpeedSearch()) -> Tuple[float, float]:
    """Optimal steady-state straight-line speed and power."""
    return optimal_speed(model, STRAIGHT, search)


#############################################
# Path integration
#############################################


@dataclass(frozen=True, eq=False)
class SampledPath:
    """A trajectory sampled in time: ``t`` (N,), ``position``/``velocity``/``acceleration`` (N, 2)."""

    t: np.ndarray
    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        arrays = {
            name: np.asarray(getattr(self, name), dtype=float)
            for name in ("position", "velocity", "acceleration")
        }
        if t.ndim != 1:
            raise ValidationError("sampled path timestamps must be one-dimensional")
        for name, arr in arrays.items():
            if arr.shape != (t.size, 2):
                raise ValidationError(f"sampled path {name} must have shape ({t.size}, 2), got {arr.shape}")
        if t.size >= 2 and not np.all(np.diff(t) > 0):
            raise ValidationError("sampled path timestamps must be strictly increasing")
        if not (np.all(np.isfinite(arrays["velocity"])) and np.all(np.isfinite(arrays["acceleration"]))):
            raise ValidationError("sampled path velocity and acceleration must be finite")
        object.__setattr__(self, "t", t)
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def speed(self) -> np.ndarray:
        return np.linalg.norm(self.velocity, axis=1)

    def centrifugal_acceleration_sq(self) -> np.ndarray:
        """Squared velocity-orthogonal acceleration, zero where the UAV is at rest."""
        speed_sq = np.einsum("ij,ij->i", self.velocity, self.velocity)
        acc_sq = np.einsum("ij,ij->i", self.acceleration, self.acceleration)
        along = np.einsum("ij,ij->i", self.acceleration, self.velocity)
        moving = speed_sq > 0
        result = np.zeros_like(speed_sq)
        result[moving] = acc_sq[moving] - along[moving] ** 2 / speed_sq[moving]
        return np.clip(result, 0.0, None)


def _require_samples(path: SampledPath) -> None:
    if path.t.size < 2:
        raise ValidationError("path integration needs at least 2 samples")


def _kinetic_delta(path: SampledPath, mass: float) -> float:
    speeds = path.speed()
    return 0.5 * mass * (speeds[-1] ** 2 - speeds[0] ** 2)


def integrate_rotary_energy(path: SampledPath, params: RotaryWingParams) -> float:
    """Rotary-wing propulsion energy in J along a sampled path (trapezoidal rule)."""
    _require_samples(path)
    p = params
    speed = path.speed()
    ratio = path.centrifugal_acceleration_sq() / p.g**2
    blade = p.P_b * (1 + 3 * speed**2 / p.U_tip**2)
    induced_root = np.sqrt(1 + ratio + speed**4 / (4 * p.v_0**4)) - speed**2 / (2 * p.v_0**2)
    induced = p.P_ind * np.sqrt(1 + ratio) * np.sqrt(np.clip(induced_root, 0.0, None))
    parasite = 0.5 * p.d_0 * p.rho * p.s * p.A * speed**3
    energy = integrate.trapezoid(blade + induced + parasite, path.t)
    return float(energy + _kinetic_delta(path, p.equivalent_mass))


def integrate_fixed_energy(path: SampledPath, params: FixedWingParams) -> float:
    """Fixed-wing propulsion energy in J along a sampled path (trapezoidal rule).

    Raises:
        HoverNotPossibleError: if any sample has zero speed.
    """
    _require_samples(path)
    p = params
    speed = path.speed()
    if np.any(speed <= 0):
        raise HoverNotPossibleError("fixed-wing path contains zero-speed samples")
    ratio = path.centrifugal_acceleration_sq() / p.g**2
    integrand = p.c_1 * speed**3 + p.c_2 / speed * (1 + ratio)
    energy = integrate.trapezoid(integrand, path.t)
    if p.mass is not None:
        energy += _kinetic_delta(path, p.mass)
    return float(energy)


def integrate_energy(path: SampledPath, model: UavModel) -> float:
    if isinstance(model, FixedWing):
        return integrate_fixed_energy(path, model.params)
    return integrate_rotary_energy(path, model.params)


#############################################
# Trajectory energy
#############################################


@dataclass(frozen=True)
class SegmentEnergy:
    """Energy bookkeeping for one trajectory segment flown at its optimal speed."""

    radius: Radius
    length: float
    speed: float
    power: float
    duration: float

    @property
    def energy(self) -> float:
        return self.power * self.duration


@dataclass(frozen=True)
class TrajectoryEnergy:
    """Average power and energy per hour of a closed trajectory.

    ``trajectory`` is the input trajectory with every segment's speed assigned.
    """

    uav_type: UavType
    trajectory: "Trajectory"
    avg_power: float
    segments: Tuple[SegmentEnergy, ...]

    @property
    def energy_per_hour(self) -> float:
        return self.avg_power * SECONDS_PER_HOUR

    @property
    def lap_time(self) -> float:
        return sum(seg.duration for seg in self.segments)


def trajectory_energy(
    trajectory: "Trajectory", model: UavModel, search: SpeedSearch = SpeedSearch()
) -> TrajectoryEnergy:
    """Fly every segment at its own optimal speed and average power over one lap.

    Speed changes between segments are taken as instantaneous.

    Raises:
        InfeasibleRadiusError: an arc is tighter than the model's minimum radius.
        HoverNotPossibleError: a hover trajectory was given to a fixed-wing model.
    """
    if trajectory.is_hover:
        if not model.can_hover:
            raise HoverNotPossibleError("fixed-wing UAVs cannot hover")
        hover = model.power(0.0, STRAIGHT)
        return TrajectoryEnergy(model.uav_type, trajectory, hover, ())

    for segment in trajectory.segments:
        check_radius_feasible(model, segment.radius)

    segments = []
    flown = []
    for segment in trajectory.segments:
        speed, power = optimal_speed(model, segment.radius, search)
        segments.append(
            SegmentEnergy(
                radius=segment.radius,
                length=segment.length,
                speed=speed,
                power=power,
                duration=segment.length / speed,
            )
        )
        flown.append(segment.with_speed(speed))
    total_time = sum(seg.duration for seg in segments)
    avg_power = sum(seg.energy for seg in segments) / total_time
    return TrajectoryEnergy(
        model.uav_type, trajectory.with_segments(tuple(flown)), avg_power, tuple(segments)
    )
