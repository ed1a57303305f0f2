"""Flying access point placement and trajectory selection.

Pipeline per scenario:

1. rate matrix between every candidate FAP grid position and every GU;
2. partition of the GUs into the fewest groups a single FAP can serve
   (airtime constraint ``sum(load_i / rate_i) <= 1`` at a common position, and
   every member inside its coverage sphere from some grid position);
3. per group: target SNR, coverage spheres, rasterised intersection area with
   earlier groups' areas removed, trajectory candidates;
4. per UAV type: energy of every candidate at optimal speeds, minimum kept.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .energy_models import (
    SECONDS_PER_HOUR,
    STRAIGHT,
    FixedWing,
    RotaryWing,
    SpeedSearch,
    TrajectoryEnergy,
    UavModel,
    UavType,
    straight_line_optimum,
    trajectory_energy,
)
from .errors import InfeasibleError, InfeasibleGroupError, LinkBudgetError, ValidationError
from .geometry import Bounds, IntersectionArea, intersect_discs, sphere_to_disc, subtract_overlaps
from .radio_link import (
    LinkBudget,
    McsTable,
    load_mcs_table,
    max_distance_for_snr,
    rates_for_snr,
    snr_at,
)
from .trajectory import (
    Trajectory,
    TrajectoryKind,
    build_circular,
    build_elliptic,
    build_inner_elliptic,
    fixed_wing_feasible,
    hover,
)

LOGGER = logging.getLogger(__name__)

TARGET_SNR_POLICIES = ("uniform", "per_gu")

# Airtime values within this slack of 1 still count as feasible.
_AIRTIME_EPS = 1e-12
# Upper bound on the number of (mask, position) airtime entries held at once.
_AIRTIME_BLOCK = 1 << 22


@dataclass(frozen=True)
class GroundUser:
    position: Tuple[float, float, float]
    load_mbps: float

    def __post_init__(self):
        position = tuple(float(c) for c in self.position)
        if len(position) != 3 or not all(math.isfinite(c) for c in position):
            raise ValidationError(f"GU position must be three finite coordinates, got {self.position!r}")
        if not math.isfinite(self.load_mbps) or self.load_mbps < 0:
            raise ValidationError(f"GU load must be non-negative, got {self.load_mbps!r}")
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "load_mbps", float(self.load_mbps))


@dataclass(frozen=True)
class PlannerConfig:
    fap_altitude: float = 6.0
    grid_res: float = 1.0
    exact_partition_limit: int = 16
    target_snr_policy: str = "uniform"
    # When false, intersection areas may extend past the GU field.
    clip_to_area: bool = False

    def __post_init__(self):
        if self.grid_res <= 0:
            raise ValidationError(f"planner.grid_res must be positive, got {self.grid_res}")
        if self.exact_partition_limit < 0:
            raise ValidationError("planner.exact_partition_limit must be non-negative")
        if self.target_snr_policy not in TARGET_SNR_POLICIES:
            raise ValidationError(
                f"planner.target_snr_policy must be one of {', '.join(TARGET_SNR_POLICIES)}, "
                f"got {self.target_snr_policy!r}"
            )


@dataclass(frozen=True)
class PlanContext:
    """Everything :func:`plan` needs besides the scenario itself."""

    models: Tuple[UavModel, ...] = (RotaryWing(), FixedWing())
    budget: LinkBudget = LinkBudget()
    mcs_table: Optional[McsTable] = None
    planner: PlannerConfig = PlannerConfig()
    search: SpeedSearch = SpeedSearch()

    def __post_init__(self):
        if self.mcs_table is None:
            object.__setattr__(self, "mcs_table", load_mcs_table())
        if not self.models:
            raise ValidationError("at least one UAV model is required")

    def model(self, uav_type: UavType) -> Optional[UavModel]:
        for model in self.models:
            if model.uav_type is uav_type:
                return model
        return None


#############################################
# Links and grouping
#############################################


def candidate_grid(field_bounds: Bounds, res: float) -> np.ndarray:
    """Lattice points (P, 2) of spacing ``res`` covering ``field_bounds``, row-major in x."""
    xs = np.arange(math.ceil(field_bounds.xmin / res - 1e-9), math.floor(field_bounds.xmax / res + 1e-9) + 1)
    ys = np.arange(math.ceil(field_bounds.ymin / res - 1e-9), math.floor(field_bounds.ymax / res + 1e-9) + 1)
    if xs.size == 0 or ys.size == 0:
        raise ValidationError("candidate grid is empty")
    gx, gy = np.meshgrid(xs * res, ys * res, indexing="ij")
    return np.column_stack((gx.ravel(), gy.ravel()))


def link_matrix(
    gus: Sequence[GroundUser],
    grid: np.ndarray,
    altitude: float,
    budget: LinkBudget,
    table: McsTable,
) -> np.ndarray:
    """Data rate (Mbit/s) of every GU (columns) from every grid position (rows)."""
    if len(grid) == 0:
        raise ValidationError("candidate grid is empty")
    positions = np.array([gu.position for gu in gus], dtype=float).reshape(-1, 3)
    dx = grid[:, 0, None] - positions[None, :, 0]
    dy = grid[:, 1, None] - positions[None, :, 1]
    dz = altitude - positions[None, :, 2]
    distance = np.maximum(np.sqrt(dx**2 + dy**2 + dz**2), budget.min_distance_m)
    return rates_for_snr(snr_at(distance, budget), table)


def _airtime_columns(loads: np.ndarray, rates: np.ndarray) -> np.ndarray:
    """Per-position airtime share of each GU; ``inf`` where the GU has no link."""
    airtime = np.full(rates.shape, np.inf)
    np.divide(loads[None, :], rates, out=airtime, where=rates > 0)
    return airtime


def subset_feasible(
    subset: Sequence[int], loads: Sequence[float], rates: np.ndarray
) -> Optional[int]:
    """Grid index where ``subset`` fits with the least airtime, ``None`` if nowhere.

    Ties resolve to the lowest grid index.
    """
    members = list(subset)
    if not members:
        return None
    airtime = _airtime_columns(np.asarray(loads, dtype=float)[members], rates[:, members]).sum(axis=1)
    best = int(np.argmin(airtime))
    if airtime[best] > 1 + _AIRTIME_EPS:
        return None
    return best


def _mask_members(mask: int) -> Tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


def feasible_masks(loads: Sequence[float], rates: np.ndarray) -> np.ndarray:
    """Boolean array over all 2^n GU subsets: can one FAP position serve the subset."""
    n = rates.shape[1]
    airtime = _airtime_columns(np.asarray(loads, dtype=float), rates)
    size = 1 << n
    best = np.full(size, np.inf)
    chunk = max(1, _AIRTIME_BLOCK // size)
    for start in range(0, len(airtime), chunk):
        cols = airtime[start : start + chunk]
        table = np.empty((size, len(cols)))
        table[0] = 0.0
        for b in range(n):
            lo = 1 << b
            table[lo : 2 * lo] = table[:lo] + cols[:, b]
        np.minimum(best, table.min(axis=1), out=best)
    return best <= 1 + _AIRTIME_EPS


def coverage_levels(
    gus: Sequence[GroundUser],
    grid: np.ndarray,
    altitude: float,
    budget: LinkBudget,
    table: McsTable,
) -> np.ndarray:
    """Highest MCS level (P, n) whose coverage sphere, margin included, holds each grid
    position for each GU; -1 where not even the lowest MCS reaches."""
    reach_sq = np.full(len(table), -1.0)
    for k, entry in enumerate(table.entries):
        try:
            reach_sq[k] = max_distance_for_snr(entry.min_snr_db, budget) ** 2
        except LinkBudgetError:
            break
    positions = np.array([gu.position for gu in gus], dtype=float).reshape(-1, 3)
    dist_sq = (
        (grid[:, 0, None] - positions[None, :, 0]) ** 2
        + (grid[:, 1, None] - positions[None, :, 1]) ** 2
        + (altitude - positions[None, :, 2]) ** 2
    )
    return (dist_sq[:, :, None] <= reach_sq).sum(axis=2) - 1


def _down_closure(masks: np.ndarray, n: int) -> np.ndarray:
    """Boolean array over 2^n subsets marking every subset of any of ``masks``."""
    closed = np.zeros(1 << n, dtype=bool)
    closed[masks] = True
    for b in range(n):
        view = closed.reshape(-1, 2, 1 << b)
        view[:, 0, :] |= view[:, 1, :]
    return closed


@dataclass(frozen=True, eq=False)
class Coverage:
    """Group test matching the intersection-area construction.

    A group is coverable from a grid position when every member's MCS level there
    reaches the level its target SNR asks for, i.e. when the position lies inside
    all of the group's coverage spheres.
    """

    levels: np.ndarray
    table: McsTable
    policy: str = "uniform"

    def required(self, loads: Sequence[float]) -> Optional[np.ndarray]:
        """MCS level each member needs, ``None`` when no MCS carries a uniform group."""
        rates = self.table.rates
        if self.policy == "uniform":
            level = int(np.sum(rates < float(sum(loads))))
            if level == len(rates):
                return None
            return np.full(len(loads), level)
        size = len(loads)
        needed = (rates[None, :] / size < np.asarray(loads, dtype=float)[:, None]).sum(axis=1)
        return np.minimum(needed, len(rates) - 1)

    def covering(self, members: Sequence[int], loads: Sequence[float]) -> np.ndarray:
        """Grid positions (boolean, P) from which ``members`` are coverable."""
        members = list(members)
        needed = self.required([loads[i] for i in members])
        if needed is None:
            return np.zeros(len(self.levels), dtype=bool)
        return np.all(self.levels[:, members] >= needed, axis=1)

    def masks(self, loads: Sequence[float]) -> np.ndarray:
        """Boolean array over all 2^n GU subsets: is the subset coverable from some position."""
        loads = np.asarray(loads, dtype=float)
        n = len(loads)
        size = 1 << n
        weights = (1 << np.arange(n)).astype(np.int64)
        totals = np.zeros(size)
        counts = np.zeros(size, dtype=np.int64)
        for b in range(n):
            lo = 1 << b
            totals[lo : 2 * lo] = totals[:lo] + loads[b]
            counts[lo : 2 * lo] = counts[:lo] + 1
        rates = self.table.rates
        coverable = np.zeros(size, dtype=bool)
        if self.policy == "uniform":
            wanted = np.searchsorted(rates, totals, side="left")
            for level in np.unique(wanted[wanted < len(rates)]).tolist():
                reach = (self.levels >= level).astype(np.int64) @ weights
                coverable |= (wanted == level) & _down_closure(reach, n)
        else:
            for group_size in range(1, n + 1):
                needed = np.minimum((rates[None, :] / group_size < loads[:, None]).sum(axis=1), len(rates) - 1)
                reach = (self.levels >= needed[None, :]).astype(np.int64) @ weights
                coverable |= (counts == group_size) & _down_closure(reach, n)
        coverable[0] = True
        return coverable


def _exact_partition(feasible: np.ndarray, n: int) -> List[int]:
    """Fewest feasible masks partitioning all GUs; lexicographically smallest among optima."""
    masks = np.flatnonzero(feasible[1:]) + 1
    lowest = masks & -masks
    by_low = {1 << b: masks[lowest == (1 << b)] for b in range(n)}
    memo: Dict[int, Tuple[int, ...]] = {0: ()}

    def solve(mask: int) -> Tuple[int, ...]:
        if mask in memo:
            return memo[mask]
        low = mask & -mask
        options = by_low[low]
        options = options[(options & ~mask) == 0]
        best: Optional[Tuple[int, ...]] = None
        for sub in options.tolist():
            rest = solve(mask ^ sub)
            if best is None or len(rest) + 1 < len(best):
                best = (sub,) + rest
        # the singleton {low} is always feasible, so best is set
        memo[mask] = best
        return best

    return list(solve((1 << n) - 1))


def _greedy_partition(
    loads: Sequence[float], rates: np.ndarray, coverage: Optional[Coverage] = None
) -> List[Tuple[int, ...]]:
    """Grow each group from the lowest unassigned GU, adding the GU that keeps airtime lowest."""
    airtime = _airtime_columns(np.asarray(loads, dtype=float), rates)
    remaining = list(range(rates.shape[1]))
    groups: List[Tuple[int, ...]] = []
    while remaining:
        group = [remaining.pop(0)]
        total = airtime[:, group[0]].copy()
        while True:
            best_gu, best_air = None, math.inf
            for gu in remaining:
                combined = total + airtime[:, gu]
                if coverage is not None:
                    combined = np.where(coverage.covering(group + [gu], loads), combined, np.inf)
                candidate = float(np.min(combined))
                if candidate <= 1 + _AIRTIME_EPS and candidate < best_air:
                    best_gu, best_air = gu, candidate
            if best_gu is None:
                break
            group.append(best_gu)
            remaining.remove(best_gu)
            total += airtime[:, best_gu]
        groups.append(tuple(sorted(group)))
    return groups


def min_partition(
    loads: Sequence[float],
    rates: np.ndarray,
    exact_limit: int = 16,
    coverage: Optional[Coverage] = None,
) -> List[Tuple[int, ...]]:
    """Partition GU indices into the fewest groups that a single FAP can serve.

    Exact for up to ``exact_limit`` GUs, greedy beyond. With ``coverage`` a group
    must also be coverable, so its intersection area is never empty before
    earlier groups' cells are removed.

    Raises:
        InfeasibleGroupError: a GU cannot be served even on its own.
    """
    n = rates.shape[1]
    if n == 0:
        return []
    for i in range(n):
        alone = subset_feasible([i], loads, rates) is not None
        if alone and coverage is not None:
            alone = bool(coverage.covering([i], loads).any())
        if not alone:
            raise InfeasibleGroupError(
                f"GU {i} cannot be served by any FAP position (load {loads[i]} Mbit/s)", [i]
            )
    if n > exact_limit:
        LOGGER.info("%d GUs exceed the exact partition limit (%d), grouping greedily", n, exact_limit)
        return _greedy_partition(loads, rates, coverage)
    feasible = feasible_masks(loads, rates)
    if coverage is not None:
        feasible &= coverage.masks(loads)
    return [_mask_members(mask) for mask in _exact_partition(feasible, n)]


def group_target_snr(
    loads: Sequence[float], table: McsTable, policy: str = "uniform"
) -> Tuple[float, ...]:
    """Minimum SNR (dB) each group member must see.

    ``uniform``: every member gets the smallest MCS whose rate carries the whole
    group's load. ``per_gu``: each member gets the smallest MCS whose rate shared
    by the group covers its own load; members no MCS covers get the top MCS.

    Raises:
        InfeasibleGroupError: under ``uniform``, the group's load exceeds the top rate.
    """
    if policy == "uniform":
        total = float(sum(loads))
        for entry in table.entries:
            if total <= entry.rate_mbps:
                return tuple(entry.min_snr_db for _ in loads)
        raise InfeasibleGroupError(
            f"group load {total:.2f} Mbit/s exceeds the top MCS rate {table.top_rate} Mbit/s"
        )
    if policy == "per_gu":
        size = len(loads)
        targets = []
        for load in loads:
            entry = next((e for e in table.entries if e.rate_mbps / size >= load), None)
            if entry is None:
                LOGGER.warning("no MCS covers a load of %.2f Mbit/s in a group of %d", load, size)
                entry = table[len(table) - 1]
            targets.append(entry.min_snr_db)
        return tuple(targets)
    raise ValidationError(f"unknown target SNR policy {policy!r}")


#############################################
# Trajectory selection
#############################################


@dataclass(frozen=True)
class CandidateResult:
    """One trajectory candidate evaluated for one UAV type."""

    uav_type: UavType
    trajectory: Trajectory
    flight: Optional[TrajectoryEnergy] = None
    reason: str = ""

    @property
    def kind(self) -> TrajectoryKind:
        return self.trajectory.kind

    @property
    def feasible(self) -> bool:
        return self.flight is not None

    @property
    def energy_per_hour(self) -> float:
        return self.flight.energy_per_hour if self.flight else math.inf


@dataclass(frozen=True)
class Selection:
    """Most energy-efficient feasible candidate of one UAV type, or infeasible."""

    uav_type: UavType
    choice: Optional[CandidateResult] = None

    @property
    def feasible(self) -> bool:
        return self.choice is not None

    @property
    def kind(self) -> Optional[TrajectoryKind]:
        return self.choice.kind if self.choice else None

    @property
    def flight(self) -> Optional[TrajectoryEnergy]:
        return self.choice.flight if self.choice else None

    @property
    def avg_power(self) -> Optional[float]:
        return self.flight.avg_power if self.flight else None

    @property
    def energy_per_hour(self) -> Optional[float]:
        return self.flight.energy_per_hour if self.flight else None


def evaluate_candidate(
    trajectory: Trajectory, model: UavModel, search: SpeedSearch = SpeedSearch()
) -> CandidateResult:
    if isinstance(model, FixedWing) and not fixed_wing_feasible(trajectory, model.min_radius):
        reason = "cannot hover" if trajectory.is_hover else f"arc radius below {model.min_radius} m"
        return CandidateResult(model.uav_type, trajectory, None, reason)
    try:
        flight = trajectory_energy(trajectory, model, search)
    except InfeasibleError as exc:
        return CandidateResult(model.uav_type, trajectory, None, str(exc))
    return CandidateResult(model.uav_type, trajectory, flight)


def select_trajectory(candidates: Sequence[CandidateResult], uav_type: UavType) -> Selection:
    """Feasible candidate with the least energy per hour; ties go to the earlier kind."""
    feasible = [c for c in candidates if c.feasible]
    if not feasible:
        return Selection(uav_type)
    best = min(feasible, key=lambda c: (c.energy_per_hour, c.kind.rank))
    return Selection(uav_type, best)


#############################################
# Planning
#############################################


@dataclass(frozen=True, eq=False)
class FapPlan:
    """Placement, candidates and per-UAV-type selection of one FAP."""

    index: int
    group: Tuple[int, ...]
    best_position: Tuple[float, float]
    target_snr_db: Tuple[float, ...]
    sphere_radii: Tuple[float, ...]
    disc_radii: Tuple[Optional[float], ...]
    area: IntersectionArea
    candidates: Tuple[Trajectory, ...]
    evaluations: Dict[UavType, Tuple[CandidateResult, ...]] = field(default_factory=dict)
    selections: Dict[UavType, Selection] = field(default_factory=dict)

    @property
    def circular_radius(self) -> Optional[float]:
        for candidate in self.candidates:
            if candidate.kind is TrajectoryKind.CIRCULAR:
                return candidate.arc_radii[0]
        return None

    @property
    def centroid(self) -> Optional[Tuple[float, float]]:
        if self.area.is_empty:
            return None
        x, y = self.area.shape.centroid
        return (float(x), float(y))


def trajectory_candidates(area: IntersectionArea, fallback: Tuple[float, float]) -> Tuple[Trajectory, ...]:
    """Circular, Inner Elliptic and Elliptic trajectories for ``area`` plus Hover.

    An empty area only yields Hover at ``fallback``.
    """
    if area.is_empty:
        return (hover(fallback, area.altitude),)
    circular = build_circular(area)
    if circular.is_hover:
        return (circular,)
    candidates = [circular]
    for builder in (build_inner_elliptic, build_elliptic):
        trajectory = builder(area)
        if trajectory is not None:
            candidates.append(trajectory)
    candidates.append(hover(area.shape.centroid, area.altitude))
    return tuple(candidates)


def _group_area(
    gus: Sequence[GroundUser],
    group: Sequence[int],
    spheres: Sequence[float],
    field_bounds: Bounds,
    context: PlanContext,
) -> Tuple[Tuple[Optional[float], ...], IntersectionArea]:
    cfg = context.planner
    discs = [sphere_to_disc(gus[i].position, d, cfg.fap_altitude) for i, d in zip(group, spheres)]
    area = intersect_discs(
        discs,
        field_bounds if cfg.clip_to_area else None,
        res=cfg.grid_res,
        altitude=cfg.fap_altitude,
    )
    return tuple(d.radius if d else None for d in discs), area


def _best_position(
    group: Sequence[int], loads: Sequence[float], rates: np.ndarray, coverage: Coverage
) -> int:
    """Least-airtime grid index among the positions covering ``group``."""
    members = list(group)
    airtime = _airtime_columns(np.asarray(loads, dtype=float)[members], rates[:, members]).sum(axis=1)
    airtime[~coverage.covering(members, loads)] = np.inf
    best = int(np.argmin(airtime))
    if not math.isfinite(airtime[best]):
        return subset_feasible(members, loads, rates)
    return best


def plan(
    gus: Sequence[GroundUser], field_bounds: Bounds, context: Optional[PlanContext] = None
) -> List[FapPlan]:
    """Group the GUs, place one FAP per group and select its trajectory per UAV type.

    Raises:
        InfeasibleGroupError: some GU cannot be served at all.
    """
    if not gus:
        raise ValidationError("a scenario needs at least one GU")
    context = context or PlanContext()
    cfg = context.planner
    grid = candidate_grid(field_bounds, cfg.grid_res)
    rates = link_matrix(gus, grid, cfg.fap_altitude, context.budget, context.mcs_table)
    loads = [gu.load_mbps for gu in gus]
    coverage = Coverage(
        coverage_levels(gus, grid, cfg.fap_altitude, context.budget, context.mcs_table),
        context.mcs_table,
        cfg.target_snr_policy,
    )
    groups = min_partition(loads, rates, cfg.exact_partition_limit, coverage)
    LOGGER.info("%d GUs grouped into %d FAPs", len(gus), len(groups))

    plans: List[FapPlan] = []
    placed: List[IntersectionArea] = []
    for index, group in enumerate(groups):
        best = _best_position(group, loads, rates, coverage)
        best_position = (float(grid[best][0]), float(grid[best][1]))
        targets = group_target_snr([loads[i] for i in group], context.mcs_table, cfg.target_snr_policy)
        spheres = tuple(max_distance_for_snr(snr, context.budget) for snr in targets)
        disc_radii, area = _group_area(gus, group, spheres, field_bounds, context)
        area = subtract_overlaps(area, placed)
        if area.is_empty:
            LOGGER.warning("FAP %d: empty intersection area, hovering at %s", index, best_position)
        placed.append(area)

        candidates = trajectory_candidates(area, best_position)
        evaluations: Dict[UavType, Tuple[CandidateResult, ...]] = {}
        selections: Dict[UavType, Selection] = {}
        for model in context.models:
            results = tuple(evaluate_candidate(t, model, context.search) for t in candidates)
            for result in results:
                LOGGER.debug(
                    "FAP %d %s %s: %s",
                    index,
                    model.uav_type.value,
                    result.kind.value,
                    f"{result.energy_per_hour / 1000:.1f} kJ/h" if result.feasible else result.reason,
                )
            evaluations[model.uav_type] = results
            selections[model.uav_type] = selection = select_trajectory(results, model.uav_type)
            if selection.feasible:
                LOGGER.info(
                    "FAP %d %s: %s at %.1f kJ/h",
                    index,
                    model.uav_type.value,
                    selection.kind.value,
                    selection.energy_per_hour / 1000,
                )
            else:
                LOGGER.info("FAP %d %s: infeasible", index, model.uav_type.value)
        plans.append(
            FapPlan(
                index=index,
                group=tuple(group),
                best_position=best_position,
                target_snr_db=targets,
                sphere_radii=spheres,
                disc_radii=disc_radii,
                area=area,
                candidates=candidates,
                evaluations=evaluations,
                selections=selections,
            )
        )
    return plans


def baselines(context: PlanContext) -> Dict[str, float]:
    """Reference energies per hour in J: rotary hovering and straight-line optimum per type."""
    out: Dict[str, float] = {}
    for model in context.models:
        speed, power = straight_line_optimum(model, context.search)
        out[f"{model.uav_type.value}_straight_speed"] = speed
        out[f"{model.uav_type.value}_straight_energy_per_hour"] = power * SECONDS_PER_HOUR
        if model.can_hover:
            out[f"{model.uav_type.value}_hover_energy_per_hour"] = model.power(0.0, STRAIGHT) * SECONDS_PER_HOUR
    return out
