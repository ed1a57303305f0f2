"""Layered YAML configuration.

Sources, later ones winning key by key:

1. the embedded ``defaults.yaml``;
2. the file named by ``$FAPSIM_CONFIG`` (skipped when unset or missing);
3. the file given with ``--config``;
4. explicit command-line flags.
"""

from __future__ import annotations

import dataclasses
import logging
import os
import pathlib
import typing
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Type, TypeVar, Union

import yaml

from .energy_models import FixedWing, FixedWingParams, RotaryWing, RotaryWingParams, SpeedSearch, UavType
from .errors import ConfigError, ValidationError
from .planner import PlanContext, PlannerConfig
from .radio_link import LinkBudget, load_mcs_table
from .resources import DEFAULT_CONFIG, load_data_text

LOGGER = logging.getLogger(__name__)

CONFIG_ENV_VAR = "FAPSIM_CONFIG"

T = TypeVar("T")


@dataclass(frozen=True)
class BatchConfig:
    width: float = 100.0
    height: float = 100.0
    load_min: float = 0.0
    load_max: float = 500.0
    workers: int = 1

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValidationError("batch area must have positive width and height")
        if not 0 <= self.load_min <= self.load_max:
            raise ValidationError(
                f"batch load range must satisfy 0 <= min <= max, got [{self.load_min}, {self.load_max}]"
            )
        if self.workers < 1:
            raise ValidationError(f"batch.workers must be at least 1, got {self.workers}")

    @property
    def load_range(self) -> Tuple[float, float]:
        return (self.load_min, self.load_max)


@dataclass(frozen=True)
class TraceConfig:
    dt: float = 0.1
    # None means one lap of the selected trajectory.
    duration: Optional[float] = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValidationError(f"trace.dt must be positive, got {self.dt}")
        if self.duration is not None and self.duration < 0:
            raise ValidationError(f"trace.duration must be non-negative, got {self.duration}")


@dataclass(frozen=True)
class SimConfig:
    rotary: RotaryWingParams = field(default_factory=RotaryWingParams)
    fixed: FixedWingParams = field(default_factory=FixedWingParams)
    link: LinkBudget = field(default_factory=LinkBudget)
    mcs_table: Optional[str] = None
    speed_search: SpeedSearch = field(default_factory=SpeedSearch)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    batch: BatchConfig = field(default_factory=BatchConfig)
    trace: TraceConfig = field(default_factory=TraceConfig)
    sources: Tuple[str, ...] = ()

    def model(self, uav_type: UavType):
        if uav_type is UavType.ROTARY:
            return RotaryWing(self.rotary)
        return FixedWing(self.fixed)

    def plan_context(self, uav_types: Sequence[UavType] = (UavType.ROTARY, UavType.FIXED)) -> PlanContext:
        return PlanContext(
            models=tuple(self.model(t) for t in uav_types),
            budget=self.link,
            mcs_table=load_mcs_table(self.mcs_table),
            planner=self.planner,
            search=self.speed_search,
        )


_SECTIONS: Dict[str, type] = {
    "rotary": RotaryWingParams,
    "fixed": FixedWingParams,
    "link": LinkBudget,
    "speed_search": SpeedSearch,
    "planner": PlannerConfig,
    "batch": BatchConfig,
    "trace": TraceConfig,
}


def load_yaml_config(config_path: Union[str, pathlib.Path], *, required: bool = True) -> Dict[str, Any]:
    """Load one YAML config file into a dict.

    Args:
        config_path: path to the file
        required: raise when the file does not exist instead of returning ``{}``

    Raises:
        ConfigError: unreadable file, YAML syntax error or a non-mapping document.
    """
    path = pathlib.Path(config_path).expanduser()
    if not path.exists():
        if required:
            raise ConfigError(f"config file {path} does not exist")
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1})" if mark is not None else ""
        raise ConfigError(f"failed to parse YAML config {path}{where}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain a mapping at the top level")
    return data


def merge_config(base: Mapping[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    """Recursively merge ``override`` into a copy of ``base``; nested mappings merge key by key."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = value
    return merged


def _check_value(value: Any, hint: Any, where: str, source: str) -> Any:
    if typing.get_origin(hint) is Union:
        args = [a for a in typing.get_args(hint) if a is not type(None)]
        if value is None:
            return None
        hint = args[0]
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{source}: '{where}' must be a number, got {value!r}")
        return float(value)
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{source}: '{where}' must be an integer, got {value!r}")
        return value
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{source}: '{where}' must be true or false, got {value!r}")
        return value
    if hint is str:
        if not isinstance(value, (str, int, float)) or isinstance(value, bool):
            raise ConfigError(f"{source}: '{where}' must be a string, got {value!r}")
        return str(value)
    return value


def build_section(cls: Type[T], values: Mapping[str, Any], section: str, source: str = "config") -> T:
    """Instantiate the dataclass ``cls`` from ``values``, rejecting unknown or ill-typed keys."""
    if not isinstance(values, Mapping):
        raise ConfigError(f"{source}: section '{section}' must be a mapping")
    hints = typing.get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"{source}: unknown key(s) in '{section}': {', '.join(map(str, unknown))}")
    kwargs = {k: _check_value(v, hints[k], f"{section}.{k}", source) for k, v in values.items()}
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except ValidationError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def config_from_dict(data: Mapping[str, Any], sources: Sequence[str] = ("defaults",)) -> SimConfig:
    source = " + ".join(sources)
    unknown = sorted(set(data) - set(_SECTIONS) - {"mcs_table"})
    if unknown:
        raise ConfigError(f"{source}: unknown section(s): {', '.join(map(str, unknown))}")
    sections = {name: build_section(cls, data.get(name) or {}, name, source) for name, cls in _SECTIONS.items()}
    mcs_table = data.get("mcs_table")
    if mcs_table is not None and not isinstance(mcs_table, str):
        raise ConfigError(f"{source}: 'mcs_table' must be a file path, got {mcs_table!r}")
    return SimConfig(mcs_table=mcs_table, sources=tuple(sources), **sections)


def load_config(
    config_path: Optional[Union[str, pathlib.Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    env: Optional[Mapping[str, str]] = None,
) -> SimConfig:
    """Build the effective configuration from every layer.

    Args:
        config_path: explicit config file (``--config``); must exist
        overrides: nested dict of values set on the command line
        env: environment used to look up ``$FAPSIM_CONFIG`` (defaults to ``os.environ``)
    """
    env = os.environ if env is None else env
    data = yaml.safe_load(load_data_text(DEFAULT_CONFIG))
    sources: List[str] = ["defaults"]

    global_path = env.get(CONFIG_ENV_VAR)
    if global_path:
        layer = load_yaml_config(global_path, required=False)
        if layer:
            data = merge_config(data, layer)
            sources.append(str(global_path))
        else:
            LOGGER.debug("$%s points to %s, which is missing or empty", CONFIG_ENV_VAR, global_path)

    if config_path is not None:
        data = merge_config(data, load_yaml_config(config_path))
        sources.append(str(config_path))

    if overrides:
        data = merge_config(data, overrides)
        sources.append("command line")

    config = config_from_dict(data, sources)
    LOGGER.debug("configuration sources: %s", ", ".join(sources))
    return config
