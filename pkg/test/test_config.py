"""Tests for layered YAML configuration."""

import pytest

from fapsim.config import (
    CONFIG_ENV_VAR,
    BatchConfig,
    SimConfig,
    build_section,
    config_from_dict,
    load_config,
    load_yaml_config,
    merge_config,
)
from fapsim.energy_models import FixedWing, RotaryWing, UavType
from fapsim.errors import ConfigError
from fapsim.planner import PlannerConfig


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_defaults_only():
    """Test that the embedded defaults load without any user file."""
    config = load_config(env={})
    assert isinstance(config, SimConfig)
    assert config.rotary.P_b == 79.86
    assert config.fixed.r_min == 5.0
    assert config.fixed.mass is None
    assert config.link.snr_margin_db == 1.0
    assert config.planner == PlannerConfig()
    assert config.trace.duration is None
    assert config.sources == ("defaults",)


def test_environment_layer(tmp_path):
    path = write(tmp_path / "user.yaml", "planner:\n  grid_res: 2\n")
    config = load_config(env={CONFIG_ENV_VAR: str(path)})
    assert config.planner.grid_res == 2.0
    assert isinstance(config.planner.grid_res, float)
    assert config.sources == ("defaults", str(path))


def test_missing_environment_file_is_skipped(tmp_path):
    config = load_config(env={CONFIG_ENV_VAR: str(tmp_path / "absent.yaml")})
    assert config.sources == ("defaults",)


def test_layer_precedence(tmp_path):
    """Test that --config beats $FAPSIM_CONFIG and flags beat both."""
    user = write(tmp_path / "user.yaml", "planner:\n  grid_res: 2.0\n  fap_altitude: 8.0\n")
    explicit = write(tmp_path / "run.yaml", "planner:\n  grid_res: 3.0\n")
    config = load_config(explicit, {"trace": {"dt": 0.5}}, env={CONFIG_ENV_VAR: str(user)})
    assert config.planner.grid_res == 3.0
    assert config.planner.fap_altitude == 8.0
    assert config.trace.dt == 0.5
    assert config.sources[-1] == "command line"

    flagged = load_config(explicit, {"planner": {"grid_res": 0.5}}, env={CONFIG_ENV_VAR: str(user)})
    assert flagged.planner.grid_res == 0.5


def test_explicit_file_must_exist(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        load_config(tmp_path / "absent.yaml", env={})


def test_unknown_key(tmp_path):
    path = write(tmp_path / "bad.yaml", "rotary:\n  P_bb: 1.0\n")
    with pytest.raises(ConfigError, match="unknown key.*P_bb"):
        load_config(path, env={})


def test_unknown_section():
    with pytest.raises(ConfigError, match="unknown section"):
        config_from_dict({"radio": {}})


@pytest.mark.parametrize(
    "section,values,message",
    [
        ("planner", {"grid_res": "fine"}, "must be a number"),
        ("planner", {"exact_partition_limit": True}, "must be an integer"),
        ("planner", {"clip_to_area": "yes"}, "true or false"),
    ],
)
def test_ill_typed_values(section, values, message):
    with pytest.raises(ConfigError, match=message):
        config_from_dict({section: values})


def test_invalid_values_become_config_errors():
    with pytest.raises(ConfigError, match="grid_res must be positive"):
        config_from_dict({"planner": {"grid_res": -1.0}})
    with pytest.raises(ConfigError, match="load range"):
        build_section(BatchConfig, {"load_min": 10.0, "load_max": 5.0}, "batch")


def test_yaml_syntax_error_reports_line(tmp_path):
    path = write(tmp_path / "broken.yaml", "planner:\n  grid_res: [1.0\n")
    with pytest.raises(ConfigError, match="line"):
        load_yaml_config(path)


def test_top_level_must_be_mapping(tmp_path):
    path = write(tmp_path / "list.yaml", "- 1\n- 2\n")
    with pytest.raises(ConfigError, match="mapping"):
        load_yaml_config(path)


def test_empty_file_is_empty_mapping(tmp_path):
    assert load_yaml_config(write(tmp_path / "empty.yaml", "")) == {}


def test_merge_is_recursive():
    merged = merge_config({"a": {"x": 1, "y": 2}, "b": 1}, {"a": {"y": 3}, "c": 4})
    assert merged == {"a": {"x": 1, "y": 3}, "b": 1, "c": 4}


def test_mcs_table_path(tmp_path):
    table = write(tmp_path / "mcs.csv", "mcs,min_snr_db,rate_mbps\n0,5.0,50.0\n")
    config = config_from_dict({"mcs_table": str(table)})
    context = config.plan_context([UavType.ROTARY])
    assert context.mcs_table.top_rate == 50.0
    with pytest.raises(ConfigError, match="file path"):
        config_from_dict({"mcs_table": 3})


def test_plan_context_models():
    config = config_from_dict({"fixed": {"r_min": 8.0}})
    context = config.plan_context()
    assert [type(m) for m in context.models] == [RotaryWing, FixedWing]
    assert context.model(UavType.FIXED).min_radius == 8.0
    assert config.plan_context([UavType.FIXED]).model(UavType.ROTARY) is None
