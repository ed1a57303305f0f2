"""Tests for scenario construction, files, random generation and batch statistics."""

import json
import pathlib

import numpy as np
import pytest

from fapsim.energy_models import RotaryWing
from fapsim.errors import ScenarioError, ValidationError
from fapsim.planner import GroundUser, PlanContext
from fapsim.scenarios import (
    BatchStats,
    Scenario,
    ScenarioOutcome,
    evaluate_scenario,
    generate_random,
    parse_scenario_file,
    plan_scenario,
    reference_scenarios,
    run_batch,
    scenario_from_dict,
    scenario_to_dict,
    summarise,
    write_scenario,
)


def document(**overrides):
    data = {
        "area": {"width": 100, "height": 100},
        "gus": [{"x": 10, "y": 20, "z": 0, "load_mbps": 50}],
    }
    data.update(overrides)
    return data


class TestScenario:
    def test_gu_outside_area(self):
        with pytest.raises(ScenarioError) as excinfo:
            Scenario((GroundUser((10, 10, 0), 1.0), GroundUser((120, 10, 0), 1.0)))
        assert excinfo.value.gu_index == 1

    def test_needs_gus(self):
        with pytest.raises(ScenarioError, match="no GUs"):
            Scenario(())

    def test_positive_area(self):
        with pytest.raises(ScenarioError, match="positive size"):
            Scenario((GroundUser((0, 0, 0), 1.0),), width=0.0)

    def test_reference_set(self):
        scenarios = reference_scenarios()
        assert [len(s.gus) for s in scenarios] == [2, 5, 10]
        assert scenarios[0].loads == (200.0, 117.0)
        assert sum(scenarios[2].loads) == 56.0
        assert all(s.width == s.height == 100.0 for s in scenarios)


class TestRandomScenarios:
    def test_same_seed_same_scenario(self):
        assert generate_random(5, 42, 3) == generate_random(5, 42, 3)

    def test_index_changes_scenario(self):
        assert generate_random(5, 42, 0).gus != generate_random(5, 42, 1).gus

    def test_uniform_statistics(self):
        """10^4 GUs: positions and loads look uniform over their ranges."""
        scenario = generate_random(10_000, 7)
        positions = np.array([gu.position for gu in scenario.gus])
        loads = np.array(scenario.loads)
        assert positions[:, :2].min() >= 0.0 and positions[:, :2].max() <= 100.0
        assert np.all(positions[:, 2] == 0.0)
        assert positions[:, 0].mean() == pytest.approx(50.0, abs=1.5)
        assert positions[:, 1].mean() == pytest.approx(50.0, abs=1.5)
        assert loads.mean() == pytest.approx(250.0, abs=7.5)
        assert loads.min() >= 0.0 and loads.max() <= 500.0

    def test_degenerate_load_range(self):
        assert set(generate_random(20, 1, load_range=(0.0, 0.0)).loads) == {0.0}

    @pytest.mark.parametrize("load_range", [(-1.0, 10.0), (10.0, 5.0)])
    def test_invalid_load_range(self, load_range):
        with pytest.raises(ValidationError, match="load range"):
            generate_random(3, 1, load_range=load_range)

    def test_needs_a_gu(self):
        with pytest.raises(ValidationError):
            generate_random(0, 1)


class TestScenarioFiles:
    def test_round_trip(self, tmp_path):
        scenario = generate_random(4, 9, 2)
        loaded = parse_scenario_file(write_scenario(scenario, tmp_path / "scenario.json"))
        assert loaded == scenario

    def test_optional_fields(self):
        scenario = scenario_from_dict(document(grid_res=0.5, seed=3, name="mine"))
        assert (scenario.grid_res, scenario.seed, scenario.name) == (0.5, 3, "mine")
        assert scenario_to_dict(scenario)["grid_res"] == 0.5

    def test_missing_key(self):
        with pytest.raises(ScenarioError) as excinfo:
            scenario_from_dict({"gus": []})
        assert excinfo.value.field == "area"

    def test_bad_gu_value(self):
        data = document(gus=[{"x": 1, "y": 1, "z": 0, "load_mbps": 1}, {"x": "far", "y": 1, "z": 0, "load_mbps": 1}])
        with pytest.raises(ScenarioError) as excinfo:
            scenario_from_dict(data)
        assert excinfo.value.gu_index == 1
        assert excinfo.value.field == "gus[1].x"

    def test_negative_load(self):
        data = document(gus=[{"x": 1, "y": 1, "z": 0, "load_mbps": -5}])
        with pytest.raises(ScenarioError, match="GU 0"):
            scenario_from_dict(data)

    def test_boolean_is_not_a_number(self):
        with pytest.raises(ScenarioError):
            scenario_from_dict(document(area={"width": True, "height": 100}))

    def test_seed_must_be_integer(self):
        with pytest.raises(ScenarioError, match="seed"):
            scenario_from_dict(document(seed=1.5))

    def test_invalid_json_reports_line(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "area": {"width": 100, "height": 100},\n  "gus": [,]\n}\n', encoding="utf-8")
        with pytest.raises(ScenarioError) as excinfo:
            parse_scenario_file(path)
        assert excinfo.value.line == 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError, match="cannot read"):
            parse_scenario_file(tmp_path / "absent.json")

    def test_written_file_is_sorted_json(self, tmp_path):
        path = write_scenario(reference_scenarios()[0], tmp_path / "ref.json")
        text = path.read_text(encoding="utf-8")
        assert json.loads(text)["name"] == "reference-2"
        assert text.index('"area"') < text.index('"gus"') < text.index('"name"')


class TestPlanScenario:
    def test_scenario_resolution_overrides_context(self):
        scenario = Scenario((GroundUser((50, 50, 0), 100.0),), grid_res=2.0)
        plans = plan_scenario(scenario, PlanContext())
        assert plans[0].area.res == 2.0

    def test_context_resolution_by_default(self):
        scenario = Scenario((GroundUser((50, 50, 0), 100.0),))
        assert plan_scenario(scenario, PlanContext()).pop().area.res == 1.0


class TestOutcomes:
    def test_reference_outcome(self, references):
        outcome = evaluate_scenario(references[10], 10, 0, PlanContext())
        assert outcome.status == "ok"
        assert outcome.fap_count == 1
        assert outcome.percent_increase == pytest.approx(
            100 * (outcome.fixed_energy_per_hour / outcome.rotary_energy_per_hour - 1)
        )

    def test_fixed_infeasible_when_area_is_tiny(self):
        """Two 400 Mbit/s GUs 12 m apart need the top MCS, leaving a lens under 10 m wide."""
        scenario = Scenario((GroundUser((44, 50, 0), 400.0), GroundUser((56, 50, 0), 400.0)))
        outcome = evaluate_scenario(scenario, 2, 0, PlanContext())
        assert outcome.status == "fixed_infeasible"
        assert outcome.fixed_energy_per_hour is None
        assert outcome.percent_increase is None

    def test_unservable_scenario_is_excluded(self):
        scenario = Scenario((GroundUser((50, 50, 0), 900.0),))
        outcome = evaluate_scenario(scenario, 1, 0, PlanContext())
        assert outcome.status == "excluded"
        assert "cannot be served" in outcome.reason

    def test_summary(self):
        outcomes = [
            ScenarioOutcome(2, 0, "ok", 1, 100.0, 150.0),
            ScenarioOutcome(2, 1, "ok", 1, 100.0, 250.0),
            ScenarioOutcome(2, 2, "fixed_infeasible", 1, 100.0),
            ScenarioOutcome(2, 3, "excluded"),
        ]
        stats = summarise(2, outcomes)
        assert stats.increases == (50.0, 150.0)
        assert stats.median_increase == pytest.approx(100.0)
        assert stats.percentiles[5] == pytest.approx(55.0)
        assert (stats.feasible_count, stats.infeasible_fixed_count, stats.excluded_count) == (2, 1, 1)
        assert stats.planned == 3
        assert stats.infeasible_rate == pytest.approx(1 / 3)

    def test_summary_without_feasible_scenarios(self):
        stats = summarise(5, [ScenarioOutcome(5, 0, "excluded")])
        assert stats.percentiles == {}
        assert stats.median_increase is None
        assert stats.infeasible_rate == 0.0


class TestRunBatch:
    def test_single_scenario(self):
        result = run_batch(2, 1, seed=5)
        assert len(result.outcomes) == 1
        assert isinstance(result.stats[0], BatchStats)
        assert result.stats[0].scenarios == 1

    def test_deterministic(self):
        assert run_batch([2, 3], 2, seed=11).outcomes == run_batch([2, 3], 2, seed=11).outcomes

    def test_parallel_matches_sequential(self):
        sequential = run_batch([2, 3], 3, seed=13)
        parallel = run_batch([2, 3], 3, seed=13, workers=2)
        assert parallel.outcomes == sequential.outcomes
        assert [s.percentiles for s in parallel.stats] == [s.percentiles for s in sequential.stats]

    def test_duplicate_counts_collapse(self):
        assert [s.n_gus for s in run_batch([2, 2], 1, seed=1).stats] == [2]

    def test_small_batch_trend(self):
        """Even a dozen scenarios show fixed-wing trouble growing with the GU count."""
        stats = run_batch([2, 10], 12, seed=2024).stats
        assert stats[0].infeasible_rate <= stats[1].infeasible_rate
        if stats[0].median_increase is not None:
            assert stats[0].median_increase > 0

    @pytest.mark.parametrize("kwargs", [{"count": 0}, {"count": 1, "workers": 0}])
    def test_invalid_arguments(self, kwargs):
        with pytest.raises(ValidationError):
            run_batch(2, seed=1, **kwargs)

    def test_needs_both_uav_types(self):
        with pytest.raises(ValidationError, match="both UAV types"):
            run_batch(2, 1, seed=1, context=PlanContext(models=(RotaryWing(),)))


@pytest.mark.slow
def test_batch_trends():
    """More GUs make fixed-wing UAVs both costlier and more often impossible."""
    result = run_batch([2, 5, 10], 200, seed=2024, workers=4)
    medians = [s.median_increase for s in result.stats if s.median_increase is not None]
    rates = [s.infeasible_rate for s in result.stats]
    assert medians and medians[0] > 0
    assert medians == sorted(medians)
    assert rates == sorted(rates)
    assert all(o.rotary_energy_per_hour is not None for o in result.outcomes if o.status != "excluded")


@pytest.mark.parametrize("n_gus", [2, 5, 10])
def test_bundled_scenario_files(references, n_gus):
    """The example files under scenarios/ describe the built-in reference sets."""
    path = pathlib.Path(__file__).parent.parent / "scenarios" / f"reference_{n_gus}.json"
    assert parse_scenario_file(path) == references[n_gus]
