"""Report files: JSON summaries, CSV tables, SVG charts and waypoint traces.

Every writer is deterministic: JSON keys are sorted, numbers are rendered with
a fixed format, and SVGs carry a fixed hash salt and no date so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import json
import logging
import pathlib
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  pylint: disable=wrong-import-position
import numpy as np  # noqa: E402  pylint: disable=wrong-import-position
import pandas as pd  # noqa: E402  pylint: disable=wrong-import-position

from .energy_models import UavType  # noqa: E402
from .errors import InfeasibleError, ValidationError  # noqa: E402
from .planner import FapPlan, GroundUser  # noqa: E402
from .scenarios import PERCENTILES, BatchResult  # noqa: E402
from .trajectory import TrajectoryKind, sample_path  # noqa: E402

LOGGER = logging.getLogger(__name__)

FORMATS = ("json", "csv", "svg")
INFEASIBLE = "infeasible"

RESULT_COLUMNS = [
    "fap",
    "uav_type",
    "kind",
    "feasible",
    "selected",
    "avg_power_w",
    "energy_kj_per_hour",
    "circular_radius_m",
]
BATCH_COLUMNS = [
    "n_gus",
    "index",
    "status",
    "fap_count",
    "rotary_kj_per_hour",
    "fixed_kj_per_hour",
    "percent_increase",
    "reason",
]
TRACE_COLUMNS = ["t", "x", "y", "z", "speed"]

_BAR_COLORS = {UavType.ROTARY: "C0", UavType.FIXED: "green"}
_KIND_LINES = {TrajectoryKind.CIRCULAR: "-", TrajectoryKind.INNER_ELLIPTIC: ":", TrajectoryKind.ELLIPTIC: "--"}
_PATH_POINTS = 361

plt.rcParams["svg.hashsalt"] = "fapsim"


def _num(value: Optional[float], digits: int = 6) -> Optional[float]:
    return None if value is None else round(float(value), digits)


def _fmt(value: Optional[float], digits: int = 3) -> str:
    return INFEASIBLE if value is None else f"{value:.{digits}f}"


def _kj(value: Optional[float]) -> Optional[float]:
    return None if value is None else value / 1000.0


def parse_formats(value: Union[str, Iterable[str]]) -> List[str]:
    """Normalise ``json,csv,svg``-style selections, keeping the canonical order."""
    tokens = value.split(",") if isinstance(value, str) else list(value)
    wanted = {t.strip().lower() for t in tokens if t.strip()}
    unknown = sorted(wanted - set(FORMATS))
    if unknown:
        raise ValidationError(f"unknown output format(s): {', '.join(unknown)} (choose from {', '.join(FORMATS)})")
    if not wanted:
        raise ValidationError("at least one output format is required")
    return [f for f in FORMATS if f in wanted]


def _prepare_dir(out_dir: Union[str, pathlib.Path]) -> pathlib.Path:
    path = pathlib.Path(out_dir)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ValidationError(f"cannot create output directory {path}: {exc.strerror}") from exc
    if not path.is_dir():
        raise ValidationError(f"output path {path} is not a directory")
    return path


def _write_json(path: pathlib.Path, data: Any) -> pathlib.Path:
    try:
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def _write_csv(path: pathlib.Path, frame: pd.DataFrame) -> pathlib.Path:
    try:
        frame.to_csv(path, index=False, float_format="%.6f", lineterminator="\n")
    except OSError as exc:
        raise ValidationError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def _save_figure(fig, path: pathlib.Path) -> pathlib.Path:
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise ValidationError(f"cannot write {path}: {exc.strerror}") from exc
    finally:
        plt.close(fig)
    return path


#############################################
# Run reports
#############################################


def plan_to_dict(plan: FapPlan) -> Dict[str, Any]:
    """JSON-ready summary of one FAP, including intermediate placement results."""
    candidates: Dict[str, List[Dict[str, Any]]] = {}
    for uav_type, results in plan.evaluations.items():
        candidates[uav_type.value] = [
            {
                "kind": r.kind.value,
                "feasible": r.feasible,
                "avg_power_w": _num(r.flight.avg_power) if r.feasible else None,
                "energy_kj_per_hour": _num(_kj(r.energy_per_hour)) if r.feasible else None,
                "lap_time_s": _num(r.flight.lap_time) if r.feasible else None,
                "arc_radii_m": [_num(x) for x in r.trajectory.arc_radii],
                "length_m": _num(r.trajectory.length),
                "reason": r.reason,
            }
            for r in results
        ]
    selection = {
        uav_type.value: {
            "feasible": s.feasible,
            "kind": s.kind.value if s.feasible else INFEASIBLE,
            "avg_power_w": _num(s.avg_power),
            "energy_kj_per_hour": _num(_kj(s.energy_per_hour)),
        }
        for uav_type, s in plan.selections.items()
    }
    return {
        "index": plan.index,
        "group": list(plan.group),
        "best_position": [_num(c) for c in plan.best_position],
        "target_snr_db": [_num(x) for x in plan.target_snr_db],
        "sphere_radii_m": [_num(x) for x in plan.sphere_radii],
        "disc_radii_m": [_num(x) for x in plan.disc_radii],
        "cell_count": plan.area.cell_count,
        "centroid": None if plan.centroid is None else [_num(c) for c in plan.centroid],
        "circular_radius_m": _num(plan.circular_radius),
        "candidates": candidates,
        "selection": selection,
    }


def totals(plans: Sequence[FapPlan]) -> Dict[str, Optional[float]]:
    """Summed selected energy per hour (J) per UAV type; ``None`` if any FAP is infeasible."""
    out: Dict[str, Optional[float]] = {}
    types = sorted({t for p in plans for t in p.selections}, key=lambda t: t.value)
    for uav_type in types:
        selections = [p.selections[uav_type] for p in plans if uav_type in p.selections]
        out[uav_type.value] = (
            sum(s.energy_per_hour for s in selections) if all(s.feasible for s in selections) else None
        )
    return out


def results_frame(plans: Sequence[FapPlan]) -> pd.DataFrame:
    """One row per (FAP, UAV type, trajectory kind)."""
    rows = []
    for plan in plans:
        for uav_type, results in plan.evaluations.items():
            chosen = plan.selections[uav_type].choice
            for r in results:
                rows.append(
                    {
                        "fap": plan.index,
                        "uav_type": uav_type.value,
                        "kind": r.kind.value,
                        "feasible": r.feasible,
                        "selected": r is chosen,
                        "avg_power_w": _fmt(r.flight.avg_power if r.feasible else None),
                        "energy_kj_per_hour": _fmt(_kj(r.energy_per_hour) if r.feasible else None),
                        "circular_radius_m": "" if plan.circular_radius is None else _fmt(plan.circular_radius),
                    }
                )
    return pd.DataFrame(rows, columns=RESULT_COLUMNS)


def energy_chart(plans: Sequence[FapPlan], title: str = ""):
    """Grouped bars of selected kJ/h per FAP and UAV type; infeasible bars are omitted."""
    fig, ax = plt.subplots(figsize=(9, 5.2))
    types = [t for t in UavType if any(t in p.selections for p in plans)]
    width = 0.8 / max(len(types), 1)
    x = np.arange(len(plans))
    for k, uav_type in enumerate(types):
        xs, ys = [], []
        for i, plan in enumerate(plans):
            selection = plan.selections.get(uav_type)
            if selection is not None and selection.feasible:
                xs.append(x[i] + (k - (len(types) - 1) / 2) * width)
                ys.append(selection.energy_per_hour / 1000)
        bars = ax.bar(xs, ys, width, label=uav_type.value, color=_BAR_COLORS[uav_type])
        ax.bar_label(bars, fmt="%.1f", fontsize=8)
    ax.set_xticks(x, [f"FAP {p.index}" for p in plans])
    ax.set_ylabel("Energy consumed per hour (kJ)")
    if title:
        ax.set_title(title)
    if types:
        ax.legend()
    fig.tight_layout()
    return fig


def areas_chart(plans: Sequence[FapPlan], gus: Optional[Sequence[GroundUser]] = None, title: str = ""):
    """Outline cells of every FAP's intersection area with its trajectory candidates drawn on top."""
    fig, ax = plt.subplots(figsize=(7, 7))
    for plan in plans:
        color = f"C{plan.index % 10}"
        if not plan.area.is_empty:
            cells = plan.area.shape.boundary
            ax.scatter(
                cells[:, 0],
                cells[:, 1],
                s=4,
                marker="s",
                color=color,
                alpha=0.5,
                linewidths=0,
                label=f"FAP {plan.index} area outline",
            )
        for trajectory in plan.candidates:
            if trajectory.is_hover:
                ax.plot(*trajectory.center, marker="x", color=color, markersize=8)
                continue
            points = trajectory.position_at(np.linspace(0.0, trajectory.length, _PATH_POINTS))
            ax.plot(
                points[:, 0],
                points[:, 1],
                _KIND_LINES[trajectory.kind],
                color=color,
                linewidth=1.2,
                label=f"FAP {plan.index} {trajectory.kind.value}",
            )
    if gus:
        positions = np.array([gu.position for gu in gus])
        ax.scatter(positions[:, 0], positions[:, 1], marker="^", color="black", zorder=3, label="GUs")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    if title:
        ax.set_title(title)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=7, loc="upper right")
    fig.tight_layout()
    return fig


def emit_report(
    plans: Sequence[FapPlan],
    out_dir: Union[str, pathlib.Path],
    formats: Sequence[str] = FORMATS,
    *,
    scenario_name: str = "",
    baselines: Optional[Dict[str, float]] = None,
    gus: Optional[Sequence[GroundUser]] = None,
) -> List[pathlib.Path]:
    """Write ``report.json``, ``results.csv``, ``energy.svg`` and ``areas.svg`` (as selected)
    into ``out_dir``."""
    out = _prepare_dir(out_dir)
    written = []
    if "json" in formats:
        report = {
            "scenario": scenario_name,
            "fap_count": len(plans),
            "faps": [plan_to_dict(p) for p in plans],
            "total_energy_kj_per_hour": {k: _num(_kj(v)) for k, v in totals(plans).items()},
            "baselines": {k: _num(v) for k, v in (baselines or {}).items()},
        }
        written.append(_write_json(out / "report.json", report))
    if "csv" in formats:
        written.append(_write_csv(out / "results.csv", results_frame(plans)))
    if "svg" in formats:
        written.append(_save_figure(energy_chart(plans, scenario_name), out / "energy.svg"))
        written.append(_save_figure(areas_chart(plans, gus, scenario_name), out / "areas.svg"))
    for path in written:
        LOGGER.info("wrote %s", path)
    return written


#############################################
# Batch reports
#############################################


def batch_to_dict(result: BatchResult) -> Dict[str, Any]:
    return {
        "seed": result.seed,
        "stats": [
            {
                "n_gus": s.n_gus,
                "scenarios": s.scenarios,
                "both_feasible": s.feasible_count,
                "fixed_infeasible": s.infeasible_fixed_count,
                "excluded": s.excluded_count,
                "fixed_infeasible_rate": _num(s.infeasible_rate),
                "percent_increase_percentiles": {str(p): _num(v) for p, v in s.percentiles.items()},
                "percent_increase_mean": _num(float(np.mean(s.increases))) if s.increases else None,
            }
            for s in result.stats
        ],
    }


def batch_frame(result: BatchResult) -> pd.DataFrame:
    rows = [
        {
            "n_gus": o.n_gus,
            "index": o.index,
            "status": o.status,
            "fap_count": o.fap_count,
            "rotary_kj_per_hour": "" if o.rotary_energy_per_hour is None else _fmt(_kj(o.rotary_energy_per_hour)),
            "fixed_kj_per_hour": (
                INFEASIBLE if o.fixed_energy_per_hour is None else _fmt(_kj(o.fixed_energy_per_hour))
            ),
            "percent_increase": "" if o.percent_increase is None else _fmt(o.percent_increase),
            "reason": o.reason,
        }
        for o in result.outcomes
    ]
    return pd.DataFrame(rows, columns=BATCH_COLUMNS)


def increase_chart(result: BatchResult):
    """Box plot of the percent increase per GU count, whiskers at the 5th and 95th percentiles."""
    fig, ax = plt.subplots(figsize=(9, 5.2))
    stats = [s for s in result.stats if s.increases]
    if stats:
        ax.boxplot(
            [list(s.increases) for s in stats],
            whis=(PERCENTILES[0], PERCENTILES[-1]),
            showfliers=False,
        )
        ax.set_xticks(range(1, len(stats) + 1), [str(s.n_gus) for s in stats])
    ax.set_xlabel("Number of GUs")
    ax.set_ylabel("Fixed-wing energy increase over rotary-wing (%)")
    fig.tight_layout()
    return fig


def emit_batch_report(
    result: BatchResult, out_dir: Union[str, pathlib.Path], formats: Sequence[str] = FORMATS
) -> List[pathlib.Path]:
    """Write ``batch.json``, ``batch.csv`` and ``increase.svg`` (as selected) into ``out_dir``."""
    out = _prepare_dir(out_dir)
    written = []
    if "json" in formats:
        written.append(_write_json(out / "batch.json", batch_to_dict(result)))
    if "csv" in formats:
        written.append(_write_csv(out / "batch.csv", batch_frame(result)))
    if "svg" in formats:
        written.append(_save_figure(increase_chart(result), out / "increase.svg"))
    for path in written:
        LOGGER.info("wrote %s", path)
    return written


#############################################
# Traces
#############################################


def _traced_flight(plan: FapPlan, uav_type: UavType, kind: Optional[TrajectoryKind]):
    if kind is None:
        selection = plan.selections.get(uav_type)
        if selection is None or not selection.feasible:
            raise InfeasibleError(f"FAP {plan.index} has no feasible {uav_type.value}-wing trajectory")
        return selection.flight
    result = next((r for r in plan.evaluations.get(uav_type, ()) if r.kind is kind), None)
    if result is None:
        raise ValidationError(f"FAP {plan.index} has no {kind.value} candidate")
    if not result.feasible:
        raise InfeasibleError(
            f"FAP {plan.index} {kind.value} trajectory is infeasible for the {uav_type.value}-wing UAV: "
            f"{result.reason}"
        )
    return result.flight


def trace_frame(
    plan: FapPlan,
    uav_type: UavType,
    duration: Optional[float] = None,
    dt: float = 0.1,
    kind: Optional[TrajectoryKind] = None,
) -> pd.DataFrame:
    """Waypoints ``t,x,y,z,speed`` along the trajectory of ``uav_type``: the selected one,
    or the evaluated candidate of ``kind``.

    Raises:
        InfeasibleError: the requested trajectory is not feasible for that UAV type.
        ValidationError: the FAP has no candidate of ``kind``.
    """
    path, altitude = sample_path(_traced_flight(plan, uav_type, kind), duration, dt)
    return pd.DataFrame(
        {
            "t": path.t,
            "x": path.position[:, 0],
            "y": path.position[:, 1],
            "z": altitude,
            "speed": path.speed(),
        },
        columns=TRACE_COLUMNS,
    )


def emit_trace(
    plan: FapPlan,
    uav_type: UavType,
    path: Union[str, pathlib.Path],
    duration: Optional[float] = None,
    dt: float = 0.1,
    kind: Optional[TrajectoryKind] = None,
) -> pathlib.Path:
    path = pathlib.Path(path)
    _prepare_dir(path.parent)
    frame = trace_frame(plan, uav_type, duration, dt, kind)
    _write_csv(path, frame)
    LOGGER.info("wrote %d waypoints to %s", len(frame), path)
    return path
