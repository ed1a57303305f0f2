"""``fapsim`` command line: ``model``, ``run``, ``batch`` and ``trace``.

Exit codes: 0 on success, 2 for invalid input, 3 when the request is infeasible.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import pathlib
import sys
from typing import Any, Dict, List, Optional, Sequence

from .config import SimConfig, load_config
from .console import Colorizer, configure_logging, format_table
from .energy_models import STRAIGHT, UavType, check_radius_feasible, optimal_speed, parse_radius
from .errors import InfeasibleError, ValidationError
from .planner import FapPlan, baselines
from .reporting import FORMATS, emit_batch_report, emit_report, emit_trace, parse_formats
from .scenarios import parse_scenario_file, plan_scenario, run_batch
from .trajectory import TrajectoryKind

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3

UAV_CHOICES = ("rotary", "fixed", "both")


def _uav_types(choice: str) -> List[UavType]:
    if choice == "both":
        return [UavType.ROTARY, UavType.FIXED]
    return [UavType(choice)]


def _positive(kind: type):
    def convert(text: str):
        try:
            value = kind(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value: {text!r}") from exc
        if value <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value

    return convert


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fapsim",
        description="Energy simulator for rotary-wing and fixed-wing UAVs acting as flying access points",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--config", type=pathlib.Path, help="YAML file overriding the default parameters")
    parser.add_argument("--verbose", "-v", action="store_true", help="Show debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    model = sub.add_parser("model", help="Power of one UAV type at a speed, or its optimal speed")
    model.add_argument("--uav", choices=UAV_CHOICES, default="both")
    model.add_argument("--radius", required=True, help="Turn radius in m, or 'inf' for straight flight")
    model.add_argument("--speed", type=float, help="Speed in m/s; omit to search for the optimal speed")

    run = sub.add_parser("run", help="Plan one scenario and write its reports")
    run.add_argument("--scenario", required=True, type=pathlib.Path, help="Scenario JSON file")
    run.add_argument("--uav", choices=UAV_CHOICES, default="both")
    run.add_argument("--out", required=True, type=pathlib.Path, help="Output directory")
    run.add_argument("--grid-res", type=_positive(float), help="Placement grid resolution in m")
    run.add_argument(
        "--formats",
        default=",".join(FORMATS),
        help="Comma-separated subset of json,csv,svg (svg writes the energy and area charts)",
    )

    batch = sub.add_parser("batch", help="Compare both UAV types over seeded random scenarios")
    batch.add_argument("--gus", required=True, type=_positive(int), nargs="+", help="GU count(s)")
    batch.add_argument("--count", required=True, type=_positive(int), help="Scenarios per GU count")
    batch.add_argument("--seed", required=True, type=int, help="Master seed")
    batch.add_argument("--out", required=True, type=pathlib.Path, help="Output directory")
    batch.add_argument("--workers", type=_positive(int), help="Parallel worker processes")
    batch.add_argument("--grid-res", type=_positive(float), help="Placement grid resolution in m")
    batch.add_argument("--formats", default=",".join(FORMATS), help="Comma-separated subset of json,csv,svg")

    trace = sub.add_parser("trace", help="Write the waypoints of one FAP's selected or chosen trajectory")
    trace.add_argument("--scenario", required=True, type=pathlib.Path, help="Scenario JSON file")
    trace.add_argument("--uav", choices=UAV_CHOICES[:2], required=True)
    trace.add_argument("--fap", type=int, default=0, help="FAP index (default 0)")
    trace.add_argument(
        "--kind",
        choices=[k.value for k in TrajectoryKind],
        help="Trace this trajectory candidate instead of the selected one",
    )
    trace.add_argument(
        "--duration", type=_positive(float), help="Seconds to trace (default one lap, 1 s when hovering)"
    )
    trace.add_argument("--dt", type=_positive(float), help="Sampling interval in s")
    trace.add_argument("--grid-res", type=_positive(float), help="Placement grid resolution in m")
    trace.add_argument(
        "--out", type=pathlib.Path, help="CSV path (default trace_<uav>[_<kind>]_fap<idx>.csv)"
    )
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Dict[str, Any]] = {}
    if getattr(args, "grid_res", None) is not None:
        overrides.setdefault("planner", {})["grid_res"] = args.grid_res
    if getattr(args, "workers", None) is not None:
        overrides.setdefault("batch", {})["workers"] = args.workers
    if getattr(args, "dt", None) is not None:
        overrides.setdefault("trace", {})["dt"] = args.dt
    if getattr(args, "duration", None) is not None:
        overrides.setdefault("trace", {})["duration"] = args.duration
    return overrides


#############################################
# Commands
#############################################


def cmd_model(args: argparse.Namespace, config: SimConfig) -> int:
    colors = Colorizer()
    radius = parse_radius(args.radius)
    radius_text = "inf" if radius is STRAIGHT else f"{radius:g}"
    rows = []
    for uav_type in _uav_types(args.uav):
        model = config.model(uav_type)
        if args.speed is not None:
            check_radius_feasible(model, radius)
            power = model.power(args.speed, radius)
            rows.append([uav_type.value, radius_text, f"{args.speed:.3f}", f"{power:.3f}"])
        else:
            speed, power = optimal_speed(model, radius, config.speed_search)
            rows.append([uav_type.value, radius_text, f"{speed:.3f}", f"{power:.3f}"])
    speed_header = "speed (m/s)" if args.speed is not None else "V_opt (m/s)"
    power_header = "power (W)" if args.speed is not None else "P_min (W)"
    headers = [colors.header(h) for h in ("uav", "radius (m)", speed_header, power_header)]
    print(format_table(rows, headers))
    return EXIT_OK


def _summary_rows(plans: Sequence[FapPlan], uav_types: Sequence[UavType]) -> List[List[str]]:
    colors = Colorizer()
    rows = []
    for plan in plans:
        radius = plan.circular_radius
        row = [str(plan.index), ",".join(map(str, plan.group)), "-" if radius is None else f"{radius:.1f}"]
        for uav_type in uav_types:
            selection = plan.selections[uav_type]
            if selection.feasible:
                row.append(colors.selection(selection.kind.value, selection.energy_per_hour / 1000))
            else:
                row.append(colors.status("infeasible"))
        rows.append(row)
    return rows


def cmd_run(args: argparse.Namespace, config: SimConfig) -> int:
    formats = parse_formats(args.formats)
    scenario = parse_scenario_file(args.scenario)
    if args.grid_res is not None:
        scenario = dataclasses.replace(scenario, grid_res=args.grid_res)
    uav_types = _uav_types(args.uav)
    context = config.plan_context(uav_types)
    plans = plan_scenario(scenario, context)
    emit_report(
        plans,
        args.out,
        formats,
        scenario_name=scenario.name or args.scenario.stem,
        baselines=baselines(context),
        gus=scenario.gus,
    )
    colors = Colorizer()
    headers = [colors.header(h) for h in ["FAP", "GUs", "circle r (m)"] + [t.value for t in uav_types]]
    print(format_table(_summary_rows(plans, uav_types), headers))
    return EXIT_OK


def cmd_batch(args: argparse.Namespace, config: SimConfig) -> int:
    formats = parse_formats(args.formats)
    result = run_batch(
        args.gus,
        args.count,
        args.seed,
        context=config.plan_context(),
        load_range=config.batch.load_range,
        width=config.batch.width,
        height=config.batch.height,
        workers=config.batch.workers,
    )
    emit_batch_report(result, args.out, formats)
    colors = Colorizer()
    rows = []
    for stats in result.stats:
        percentiles = " / ".join(f"{stats.percentiles[p]:.1f}" for p in sorted(stats.percentiles)) or "-"
        rows.append(
            [
                str(stats.n_gus),
                str(stats.scenarios),
                str(stats.excluded_count),
                colors.infeasible_share(stats.infeasible_rate),
                percentiles,
            ]
        )
    headers = [
        colors.header(h)
        for h in ("GUs", "scenarios", "excluded", "fixed infeasible", "increase % p5/p25/p50/p75/p95")
    ]
    print(format_table(rows, headers))
    return EXIT_OK


def cmd_trace(args: argparse.Namespace, config: SimConfig) -> int:
    uav_type = UavType(args.uav)
    scenario = parse_scenario_file(args.scenario)
    if args.grid_res is not None:
        scenario = dataclasses.replace(scenario, grid_res=args.grid_res)
    plans = plan_scenario(scenario, config.plan_context([uav_type]))
    if not 0 <= args.fap < len(plans):
        raise ValidationError(f"FAP index {args.fap} out of range (scenario has {len(plans)} FAPs)")
    kind = TrajectoryKind(args.kind) if args.kind else None
    stem = f"trace_{uav_type.value}" + (f"_{kind.value}" if kind else "")
    out = args.out or pathlib.Path(f"{stem}_fap{args.fap}.csv")
    emit_trace(plans[args.fap], uav_type, out, config.trace.duration, config.trace.dt, kind)
    return EXIT_OK


COMMANDS = {"model": cmd_model, "run": cmd_run, "batch": cmd_batch, "trace": cmd_trace}


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, run the command and return the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    try:
        config = load_config(args.config, _overrides(args))
        return COMMANDS[args.command](args, config)
    except ValidationError as e:
        LOGGER.error(str(e))
        return EXIT_VALIDATION
    except InfeasibleError as e:
        LOGGER.error(str(e))
        return EXIT_INFEASIBLE


def main():
    """Entry point for the fapsim command"""
    sys.exit(run_cli())


if __name__ == "__main__":  # pragma: no cover
    main()
