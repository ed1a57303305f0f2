"""Ground-user scenarios: reference sets, seeded random generation, JSON files and batches.

Random scenarios draw from NumPy's PCG64 generator seeded with
``SeedSequence([seed, index])``, so scenario ``index`` of a batch depends only on
the master seed and its own index, never on execution order.
"""

from __future__ import annotations

import json
import logging
import pathlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .energy_models import UavType
from .errors import InfeasibleError, ScenarioError, ValidationError
from .geometry import Bounds
from .planner import FapPlan, GroundUser, PlanContext, plan

LOGGER = logging.getLogger(__name__)

PERCENTILES = (5, 25, 50, 75, 95)


@dataclass(frozen=True)
class Scenario:
    gus: Tuple[GroundUser, ...]
    width: float = 100.0
    height: float = 100.0
    grid_res: Optional[float] = None
    seed: Optional[int] = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "gus", tuple(self.gus))
        if self.width <= 0 or self.height <= 0:
            raise ScenarioError(f"area must have positive size, got {self.width} x {self.height}", field="area")
        if not self.gus:
            raise ScenarioError("scenario has no GUs", field="gus")
        if self.grid_res is not None and self.grid_res <= 0:
            raise ScenarioError(f"grid_res must be positive, got {self.grid_res}", field="grid_res")
        for index, gu in enumerate(self.gus):
            x, y, _ = gu.position
            if not (0 <= x <= self.width and 0 <= y <= self.height):
                raise ScenarioError(
                    f"GU at ({x:g}, {y:g}) lies outside the {self.width:g} x {self.height:g} m area",
                    gu_index=index,
                )

    @property
    def bounds(self) -> Bounds:
        return Bounds(0.0, 0.0, self.width, self.height)

    @property
    def loads(self) -> Tuple[float, ...]:
        return tuple(gu.load_mbps for gu in self.gus)


def _gus(rows: Sequence[Tuple[float, float, float, float]]) -> Tuple[GroundUser, ...]:
    return tuple(GroundUser((x, y, z), load) for x, y, z, load in rows)


def reference_scenarios() -> List[Scenario]:
    """The three fixed 100 x 100 m scenarios with 2, 5 and 10 GUs."""
    return [
        Scenario(_gus([(47, 32, 0, 200), (52, 71, 0, 117)]), name="reference-2"),
        Scenario(
            _gus(
                [
                    (19, 62, 0, 36),
                    (85, 46, 0, 27),
                    (86, 53, 0, 19),
                    (2, 9, 0, 14),
                    (52, 88, 0, 23),
                ]
            ),
            name="reference-5",
        ),
        Scenario(
            _gus(
                [
                    (69, 83, 0, 9),
                    (68, 91, 0, 6),
                    (26, 16, 0, 1),
                    (67, 8, 0, 5),
                    (38, 21, 0, 3),
                    (23, 71, 0, 6),
                    (60, 34, 0, 7),
                    (8, 31, 0, 5),
                    (59, 59, 0, 8),
                    (20, 79, 0, 6),
                ]
            ),
            name="reference-10",
        ),
    ]


def scenario_rng(seed: int, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))


def generate_random(
    n: int,
    seed: int,
    index: int = 0,
    load_range: Tuple[float, float] = (0.0, 500.0),
    width: float = 100.0,
    height: float = 100.0,
) -> Scenario:
    """Scenario with ``n`` ground-level GUs placed and loaded uniformly at random."""
    if n < 1:
        raise ValidationError(f"a random scenario needs at least one GU, got {n}")
    low, high = load_range
    if low < 0 or high < low:
        raise ValidationError(f"invalid load range [{low}, {high}]")
    rng = scenario_rng(seed, index)
    xs = rng.uniform(0.0, width, n)
    ys = rng.uniform(0.0, height, n)
    loads = rng.uniform(low, high, n) if high > low else np.full(n, low)
    gus = tuple(GroundUser((float(x), float(y), 0.0), float(load)) for x, y, load in zip(xs, ys, loads))
    return Scenario(gus, width, height, seed=seed, name=f"random-{n}-{seed}-{index}")


#############################################
# Scenario files
#############################################


def _require(mapping: Dict[str, Any], key: str, where: str) -> Any:
    if not isinstance(mapping, dict) or key not in mapping:
        raise ScenarioError(f"missing required key '{key}'", field=f"{where}{key}")
    return mapping[key]


def _number(value: Any, field_name: str, gu_index: Optional[int] = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"expected a number, got {value!r}", field=field_name, gu_index=gu_index)
    return float(value)


def scenario_from_dict(data: Dict[str, Any]) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario document must be a JSON object")
    area = _require(data, "area", "")
    width = _number(_require(area, "width", "area."), "area.width")
    height = _number(_require(area, "height", "area."), "area.height")
    raw_gus = _require(data, "gus", "")
    if not isinstance(raw_gus, list):
        raise ScenarioError("expected a list", field="gus")
    gus = []
    for index, raw in enumerate(raw_gus):
        if not isinstance(raw, dict):
            raise ScenarioError("expected an object", field=f"gus[{index}]", gu_index=index)
        values = {}
        for key in ("x", "y", "z", "load_mbps"):
            if key not in raw:
                raise ScenarioError(f"missing required key '{key}'", field=f"gus[{index}].{key}", gu_index=index)
            values[key] = _number(raw[key], f"gus[{index}].{key}", index)
        try:
            gus.append(GroundUser((values["x"], values["y"], values["z"]), values["load_mbps"]))
        except ValidationError as exc:
            raise ScenarioError(str(exc), field=f"gus[{index}]", gu_index=index) from exc
    grid_res = data.get("grid_res")
    if grid_res is not None:
        grid_res = _number(grid_res, "grid_res")
    seed = data.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ScenarioError(f"expected an integer, got {seed!r}", field="seed")
    return Scenario(tuple(gus), width, height, grid_res=grid_res, seed=seed, name=str(data.get("name", "")))


def parse_scenario_file(path: Union[str, pathlib.Path]) -> Scenario:
    """Load a scenario JSON document: ``area: {width, height}``, ``gus: [{x, y, z, load_mbps}]``."""
    path = pathlib.Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON in {path}: {exc.msg}", line=exc.lineno) from exc
    scenario = scenario_from_dict(data)
    LOGGER.debug("loaded scenario %s with %d GUs", path, len(scenario.gus))
    return scenario


def scenario_to_dict(scenario: Scenario) -> Dict[str, Any]:
    data: Dict[str, Any] = {
        "area": {"width": scenario.width, "height": scenario.height},
        "gus": [
            {"x": gu.position[0], "y": gu.position[1], "z": gu.position[2], "load_mbps": gu.load_mbps}
            for gu in scenario.gus
        ],
    }
    if scenario.grid_res is not None:
        data["grid_res"] = scenario.grid_res
    if scenario.seed is not None:
        data["seed"] = scenario.seed
    if scenario.name:
        data["name"] = scenario.name
    return data


def write_scenario(scenario: Scenario, path: Union[str, pathlib.Path]) -> pathlib.Path:
    path = pathlib.Path(path)
    path.write_text(json.dumps(scenario_to_dict(scenario), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def plan_scenario(scenario: Scenario, context: Optional[PlanContext] = None) -> List[FapPlan]:
    """Plan ``scenario``, honouring its own grid resolution when it sets one."""
    context = context or PlanContext()
    if scenario.grid_res is not None and scenario.grid_res != context.planner.grid_res:
        context = replace(context, planner=replace(context.planner, grid_res=scenario.grid_res))
    return plan(scenario.gus, scenario.bounds, context)


#############################################
# Batches
#############################################


@dataclass(frozen=True)
class ScenarioOutcome:
    """Result of planning one random scenario for both UAV types.

    ``status`` is ``ok``, ``fixed_infeasible`` or ``excluded`` (not even the
    rotary-wing plan exists).
    """

    n_gus: int
    index: int
    status: str
    fap_count: int = 0
    rotary_energy_per_hour: Optional[float] = None
    fixed_energy_per_hour: Optional[float] = None
    reason: str = ""

    @property
    def percent_increase(self) -> Optional[float]:
        if self.status != "ok":
            return None
        return 100.0 * (self.fixed_energy_per_hour - self.rotary_energy_per_hour) / self.rotary_energy_per_hour


@dataclass(frozen=True)
class BatchStats:
    n_gus: int
    scenarios: int
    feasible_count: int
    infeasible_fixed_count: int
    excluded_count: int
    increases: Tuple[float, ...]
    percentiles: Dict[int, float] = field(default_factory=dict)

    @property
    def planned(self) -> int:
        return self.scenarios - self.excluded_count

    @property
    def infeasible_rate(self) -> float:
        return self.infeasible_fixed_count / self.planned if self.planned else 0.0

    @property
    def median_increase(self) -> Optional[float]:
        return self.percentiles.get(50)


@dataclass(frozen=True)
class BatchResult:
    seed: int
    stats: Tuple[BatchStats, ...]
    outcomes: Tuple[ScenarioOutcome, ...]


def evaluate_scenario(scenario: Scenario, n_gus: int, index: int, context: PlanContext) -> ScenarioOutcome:
    """Plan one scenario and sum the FAP energies of each UAV type."""
    try:
        plans = plan_scenario(scenario, context)
    except InfeasibleError as exc:
        LOGGER.warning("scenario %d with %d GUs excluded: %s", index, n_gus, exc)
        return ScenarioOutcome(n_gus, index, "excluded", reason=str(exc))

    rotary = [p.selections[UavType.ROTARY] for p in plans]
    fixed = [p.selections[UavType.FIXED] for p in plans]
    if not all(s.feasible for s in rotary):
        return ScenarioOutcome(n_gus, index, "excluded", len(plans), reason="no rotary-wing trajectory")
    rotary_total = sum(s.energy_per_hour for s in rotary)
    if not all(s.feasible for s in fixed):
        return ScenarioOutcome(n_gus, index, "fixed_infeasible", len(plans), rotary_total)
    fixed_total = sum(s.energy_per_hour for s in fixed)
    return ScenarioOutcome(n_gus, index, "ok", len(plans), rotary_total, fixed_total)


def _batch_job(job: Tuple[int, int, int, Tuple[float, float], float, float, PlanContext]) -> ScenarioOutcome:
    n_gus, seed, index, load_range, width, height, context = job
    scenario = generate_random(n_gus, seed, index, load_range, width, height)
    return evaluate_scenario(scenario, n_gus, index, context)


def summarise(n_gus: int, outcomes: Sequence[ScenarioOutcome]) -> BatchStats:
    increases = tuple(o.percent_increase for o in outcomes if o.status == "ok")
    percentiles: Dict[int, float] = {}
    if increases:
        values = np.percentile(np.array(increases), PERCENTILES)
        percentiles = {p: float(v) for p, v in zip(PERCENTILES, values)}
    return BatchStats(
        n_gus=n_gus,
        scenarios=len(outcomes),
        feasible_count=sum(o.status == "ok" for o in outcomes),
        infeasible_fixed_count=sum(o.status == "fixed_infeasible" for o in outcomes),
        excluded_count=sum(o.status == "excluded" for o in outcomes),
        increases=increases,
        percentiles=percentiles,
    )


def run_batch(
    gu_counts: Union[int, Sequence[int]],
    count: int,
    seed: int,
    context: Optional[PlanContext] = None,
    load_range: Tuple[float, float] = (0.0, 500.0),
    width: float = 100.0,
    height: float = 100.0,
    workers: int = 1,
) -> BatchResult:
    """Plan ``count`` random scenarios for every GU count in ``gu_counts``.

    Per-scenario failures are recorded in the outcomes, never raised.
    """
    if count < 1:
        raise ValidationError(f"batch count must be at least 1, got {count}")
    if workers < 1:
        raise ValidationError(f"worker count must be at least 1, got {workers}")
    counts = [gu_counts] if isinstance(gu_counts, int) else list(dict.fromkeys(gu_counts))
    context = context or PlanContext()
    if {UavType.ROTARY, UavType.FIXED} - {m.uav_type for m in context.models}:
        raise ValidationError("batches compare both UAV types")

    jobs = [(n, seed, i, tuple(load_range), width, height, context) for n in counts for i in range(count)]
    LOGGER.info("running %d scenarios (%s GUs) with %d worker(s)", len(jobs), counts, workers)
    if workers == 1:
        outcomes = [_batch_job(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_batch_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))

    stats = tuple(summarise(n, [o for o in outcomes if o.n_gus == n]) for n in counts)
    for item in stats:
        LOGGER.info(
            "%d GUs: %d/%d both feasible, fixed-wing infeasible %.1f%%, median increase %s",
            item.n_gus,
            item.feasible_count,
            item.scenarios,
            100 * item.infeasible_rate,
            "n/a" if item.median_increase is None else f"{item.median_increase:.1f}%",
        )
    return BatchResult(seed, stats, tuple(outcomes))
