import json

import pytest

from orionnav.harness import (
    Report,
    RunRow,
    RunMetrics,
    ScenarioError,
    load_scenario,
    run_scenario,
    save_scenario,
    scenario_from_dict,
)
from orionnav.library import get_scenario, get_suite, scenario_a


MINIMAL = {
    "schema_version": 1,
    "name": "mini",
    "world": {
        "bounds": [8.0, 6.0],
        "walls": [[0, 0, 8, 0], [0, 6, 8, 6], [0, 0, 0, 6], [8, 0, 8, 6]],
        "objects": [{"id": 1, "label": "monitor", "position": [4.5, 3.0]}],
        "robot_start": [2.0, 3.0, 0.0],
    },
    "tasks": [{"command": "find a monitor"}],
}


def test_minimal_scenario_defaults():
    s = scenario_from_dict(json.loads(json.dumps(MINIMAL)))
    assert s.seeds == [1, 2, 3]
    assert s.planner == "oracle"
    assert s.max_ticks == 6000


def test_unknown_label_rejected():
    bad = json.loads(json.dumps(MINIMAL))
    bad["world"]["objects"][0]["label"] = "florb"
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(bad)
    assert "florb" in str(err.value)


def test_unknown_field_rejected():
    bad = json.loads(json.dumps(MINIMAL))
    bad["extra_field"] = 1
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(bad)
    assert "extra_field" in str(err.value)


def test_out_of_bounds_geometry_rejected():
    bad = json.loads(json.dumps(MINIMAL))
    bad["world"]["objects"][0]["position"] = [40.0, 3.0]
    with pytest.raises(ScenarioError):
        scenario_from_dict(bad)


def test_non_axis_aligned_wall_rejected():
    bad = json.loads(json.dumps(MINIMAL))
    bad["world"]["walls"].append([0, 0, 3, 4])
    with pytest.raises(ScenarioError):
        scenario_from_dict(bad)


def test_save_load_round_trip(tmp_path):
    s = scenario_from_dict(json.loads(json.dumps(MINIMAL)))
    p = tmp_path / "s.json"
    save_scenario(s, p)
    again = load_scenario(p)
    assert again.to_dict() == s.to_dict()
    # canonical form is stable
    save_scenario(again, tmp_path / "s2.json")
    assert (tmp_path / "s.json").read_text() == (tmp_path / "s2.json").read_text()


def test_run_determinism_byte_identical(tmp_path):
    scn = scenario_a(0)
    m1 = run_scenario(scn, 1, "oracle", out_dir=tmp_path / "a")[0]
    m2 = run_scenario(scn, 1, "oracle", out_dir=tmp_path / "b")[0]
    d1 = (tmp_path / "a" / f"{scn.name}_seed1_oracle")
    d2 = (tmp_path / "b" / f"{scn.name}_seed1_oracle")
    for name in ("metrics.json", "transcript.jsonl", "map.jsonl", "graph.json", "grid.pgm"):
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes(), name
    assert m1.deterministic_dict() == m2.deterministic_dict()


def test_aggregates_recomputable_from_rows():
    rows = [
        RunRow("s1", 1, "oracle", 0, RunMetrics(True, 2, 100, 0.1, 5.0, 0.8, "none")),
        RunRow("s1", 2, "oracle", 0, RunMetrics(False, 10, 600, 0.2, 30.0, 0.9, "exploration")),
        RunRow("s2", 1, "frontier", 0, RunMetrics(True, 0, 300, 0.3, 12.0, 0.7, "none")),
    ]
    report = Report(rows=rows)
    agg = report.aggregates()
    assert agg["oracle"]["runs"] == 2
    assert agg["oracle"]["successes"] == 1
    assert agg["oracle"]["mean_planner_steps"] == 6.0
    assert agg["frontier"]["success_rate"] == 1.0


def test_empty_suite_report():
    assert Report().aggregates() == {}


def test_bundled_library_counts_and_validity():
    assert len(get_suite("scenario_a")) == 12
    assert len(get_suite("scenario_b")) == 15
    assert len(get_suite("scenario_c")) == 5
    assert len(get_suite("dynamic")) == 9
    # every bundled scenario round-trips through the schema validator
    for suite in ("scenario_a", "scenario_b", "scenario_c", "dynamic"):
        for scn in get_suite(suite):
            again = scenario_from_dict(json.loads(json.dumps(scn.to_dict())))
            assert again.name == scn.name


def test_get_scenario_by_name():
    assert get_scenario("demo_office").name == "demo_office"
    with pytest.raises(KeyError):
        get_scenario("nope")


def _one_room(objects, config=None, tasks=("find a monitor",)):
    from orionnav.planner import Task

    w, h = 10.0, 8.0
    walls = [(0, 0, w, 0), (0, h, w, h), (0, 0, 0, h), (w, 0, w, h)]
    from orionnav.harness import Scenario

    return Scenario(
        name="cat",
        bounds=(w, h),
        walls=walls,
        objects=[{"id": i + 1, "label": l, "position": [x, y]} for i, (l, x, y) in enumerate(objects)],
        robot_start=(2.0, 3.0, 0.0),
        tasks=[Task(t) for t in tasks],
        config=config or {},
    )


def test_failure_category_navigation():
    # monitor visible through a gap too narrow to traverse: goto has no path
    scn = _one_room([("monitor", 4.8, 3.0)])
    scn.bounds = (6.0, 6.0)
    scn.walls = [(0, 0, 6, 0), (0, 6, 6, 6), (0, 0, 0, 6), (6, 0, 6, 6),
                 (3.5, 0.0, 3.5, 2.8), (3.5, 3.2, 3.5, 6.0)]
    scn.robot_start = (2.0, 3.0, 0.0)
    scn.max_steps = 1
    m = run_scenario(scn, 1, "oracle")[0]
    assert not m.success
    assert m.failure_category == "navigation"


def test_failure_category_perception():
    # small open room, target always in range and sight, detector never fires
    scn = _one_room([("monitor", 3.0, 2.0)], config={"sensor": {"p_dropout": 1.0}})
    scn.bounds = (5.0, 4.0)
    scn.walls = [(0, 0, 5, 0), (0, 4, 5, 4), (0, 0, 0, 4), (5, 0, 5, 4)]
    scn.robot_start = (1.5, 2.0, 0.0)
    scn.max_steps = 2
    scn.max_ticks = 600
    m = run_scenario(scn, 1, "oracle")[0]
    assert not m.success
    assert m.failure_category == "perception"
