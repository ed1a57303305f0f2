"""Tests for the fapsim command line."""

import json
import logging

import pytest

from fapsim import cli
from fapsim.cli import EXIT_INFEASIBLE, EXIT_OK, EXIT_VALIDATION, build_parser, run_cli
from fapsim.planner import GroundUser
from fapsim.scenarios import Scenario, write_scenario


def table_rows(output):
    """Data rows of a printed table, split on whitespace."""
    return [line.split() for line in output.strip().splitlines()[1:]]


@pytest.fixture
def reference_file(references, tmp_path):
    return write_scenario(references[2], tmp_path / "reference_2.json")


@pytest.fixture
def narrow_file(tmp_path):
    scenario = Scenario((GroundUser((44, 50, 0), 400.0), GroundUser((56, 50, 0), 400.0)), name="narrow")
    return write_scenario(scenario, tmp_path / "narrow.json")


def test_command_is_required():
    with pytest.raises(SystemExit) as excinfo:
        build_parser().parse_args([])
    assert excinfo.value.code == 2


def test_model_fixed_straight_optimum(capsys):
    """Test that the fixed-wing straight-line optimum is 30 m/s at 100 W."""
    assert run_cli(["model", "--uav", "fixed", "--radius", "inf"]) == EXIT_OK
    (row,) = table_rows(capsys.readouterr().out)
    assert row[:2] == ["fixed", "inf"]
    assert float(row[2]) == pytest.approx(30.0, abs=0.01)
    assert float(row[3]) == pytest.approx(100.0, abs=0.2)


def test_model_rotary_hover(capsys):
    assert run_cli(["model", "--uav", "rotary", "--radius", "inf", "--speed", "0"]) == EXIT_OK
    (row,) = table_rows(capsys.readouterr().out)
    assert row == ["rotary", "inf", "0.000", "168.490"]


def test_model_both_types(capsys):
    assert run_cli(["model", "--radius", "108"]) == EXIT_OK
    rows = table_rows(capsys.readouterr().out)
    assert [r[0] for r in rows] == ["rotary", "fixed"]
    assert float(rows[1][2]) == pytest.approx(22.48, abs=0.05)


@pytest.mark.parametrize(
    "argv",
    [
        ["model", "--uav", "fixed", "--radius", "inf", "--speed", "0"],
        ["model", "--uav", "fixed", "--radius", "3"],
    ],
    ids=["fixed-hover", "fixed-tight-turn"],
)
def test_model_infeasible(argv, capsys):
    assert run_cli(argv) == EXIT_INFEASIBLE
    assert "ERROR" in capsys.readouterr().err


def test_model_invalid_radius():
    assert run_cli(["model", "--radius", "wide"]) == EXIT_VALIDATION


def test_errors_go_through_the_cli_logger(monkeypatch, caplog):
    monkeypatch.setattr(cli, "configure_logging", lambda verbose=False: None)
    with caplog.at_level(logging.ERROR):
        assert run_cli(["model", "--radius", "wide"]) == EXIT_VALIDATION
    assert [r.name for r in caplog.records if r.levelno >= logging.ERROR] == ["fapsim.cli"]


def test_run_writes_reports(reference_file, tmp_path, capsys):
    out = tmp_path / "out"
    assert run_cli(["run", "--scenario", str(reference_file), "--out", str(out)]) == EXIT_OK
    assert {p.name for p in out.iterdir()} == {"report.json", "results.csv", "energy.svg", "areas.svg"}
    report = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert report["scenario"] == "reference-2"
    assert "rotary_hover_energy_per_hour" in report["baselines"]
    assert "kJ/h" in capsys.readouterr().out


def test_run_single_type_and_formats(reference_file, tmp_path):
    out = tmp_path / "out"
    argv = ["run", "--scenario", str(reference_file), "--out", str(out), "--uav", "rotary", "--formats", "json"]
    assert run_cli(argv) == EXIT_OK
    report = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert set(report["faps"][0]["selection"]) == {"rotary"}


def test_run_grid_resolution_flag(reference_file, tmp_path):
    out = tmp_path / "out"
    argv = ["run", "--scenario", str(reference_file), "--out", str(out), "--grid-res", "2", "--formats", "json"]
    assert run_cli(argv) == EXIT_OK
    fine = json.loads((out / "report.json").read_text(encoding="utf-8"))["faps"][0]["cell_count"]
    argv[-3:] = ["1", "--formats", "json"]
    assert run_cli(argv) == EXIT_OK
    assert json.loads((out / "report.json").read_text(encoding="utf-8"))["faps"][0]["cell_count"] > fine


def test_run_reports_infeasible_fixed_wing(narrow_file, tmp_path, capsys):
    """Test that an infeasible fixed-wing FAP is reported, not treated as an error."""
    assert run_cli(["run", "--scenario", str(narrow_file), "--out", str(tmp_path / "out")]) == EXIT_OK
    assert "infeasible" in capsys.readouterr().out


def test_run_missing_scenario(tmp_path):
    argv = ["run", "--scenario", str(tmp_path / "absent.json"), "--out", str(tmp_path)]
    assert run_cli(argv) == EXIT_VALIDATION


def test_run_unservable_scenario(tmp_path):
    path = write_scenario(Scenario((GroundUser((50, 50, 0), 900.0),)), tmp_path / "heavy.json")
    assert run_cli(["run", "--scenario", str(path), "--out", str(tmp_path / "out")]) == EXIT_INFEASIBLE


def test_run_unknown_format(reference_file, tmp_path):
    argv = ["run", "--scenario", str(reference_file), "--out", str(tmp_path), "--formats", "pdf"]
    assert run_cli(argv) == EXIT_VALIDATION


def test_non_positive_grid_resolution(reference_file, tmp_path):
    with pytest.raises(SystemExit):
        run_cli(["run", "--scenario", str(reference_file), "--out", str(tmp_path), "--grid-res", "0"])


def test_bad_config_file(reference_file, tmp_path):
    config = tmp_path / "bad.yaml"
    config.write_text("planner:\n  resolution: 2\n", encoding="utf-8")
    argv = ["--config", str(config), "run", "--scenario", str(reference_file), "--out", str(tmp_path)]
    assert run_cli(argv) == EXIT_VALIDATION


def test_batch(tmp_path, capsys):
    out = tmp_path / "batch"
    argv = ["batch", "--gus", "2", "3", "--count", "2", "--seed", "7", "--out", str(out), "--formats", "json,csv"]
    assert run_cli(argv) == EXIT_OK
    data = json.loads((out / "batch.json").read_text(encoding="utf-8"))
    assert [s["n_gus"] for s in data["stats"]] == [2, 3]
    assert (out / "batch.csv").exists()
    assert not (out / "increase.svg").exists()
    assert [r[0] for r in table_rows(capsys.readouterr().out)] == ["2", "3"]


def test_trace_default_path(reference_file, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    argv = ["trace", "--scenario", str(reference_file), "--uav", "fixed", "--duration", "5", "--dt", "1"]
    assert run_cli(argv) == EXIT_OK
    lines = (tmp_path / "trace_fixed_fap0.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "t,x,y,z,speed"
    assert len(lines) == 7


def test_trace_infeasible(narrow_file, tmp_path):
    argv = ["trace", "--scenario", str(narrow_file), "--uav", "fixed", "--out", str(tmp_path / "t.csv")]
    assert run_cli(argv) == EXIT_INFEASIBLE


def test_trace_fap_out_of_range(reference_file, tmp_path):
    argv = ["trace", "--scenario", str(reference_file), "--uav", "rotary", "--fap", "4", "--out", str(tmp_path / "t.csv")]
    assert run_cli(argv) == EXIT_VALIDATION


def test_model_tight_turn_rejected_at_speed(capsys):
    assert run_cli(["model", "--uav", "fixed", "--radius", "3", "--speed", "20"]) == EXIT_INFEASIBLE
    assert "below the minimum radius" in capsys.readouterr().err


def test_trace_kind(reference_file, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    argv = ["trace", "--scenario", str(reference_file), "--uav", "rotary", "--kind", "circular"]
    argv += ["--duration", "5", "--dt", "1"]
    assert run_cli(argv) == EXIT_OK
    lines = (tmp_path / "trace_rotary_circular_fap0.csv").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 7


def test_trace_hover_defaults_to_one_second(reference_file, tmp_path):
    out = tmp_path / "hover.csv"
    argv = ["trace", "--scenario", str(reference_file), "--uav", "rotary", "--kind", "hover", "--out", str(out)]
    assert run_cli(argv) == EXIT_OK
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 12
    assert lines[-1].startswith("1.000000,")


def test_trace_kind_infeasible_for_fixed_wing(reference_file, tmp_path, capsys):
    argv = ["trace", "--scenario", str(reference_file), "--uav", "fixed", "--kind", "hover"]
    argv += ["--out", str(tmp_path / "t.csv")]
    assert run_cli(argv) == EXIT_INFEASIBLE
    assert "cannot hover" in capsys.readouterr().err


def test_trace_unknown_kind(reference_file):
    with pytest.raises(SystemExit):
        run_cli(["trace", "--scenario", str(reference_file), "--uav", "fixed", "--kind", "spiral"])
