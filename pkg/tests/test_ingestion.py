import json
import random
import shutil

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.dispatch import evaluate_schedule
from artifact.domain import BatteryAction, validate_problem
from artifact.ingestion import (
    InputError,
    PowerTrace,
    cluster_power_states,
    device_from_dict,
    kmeans_1d,
    load_scenario,
    load_trace,
    load_weather,
    read_schedule,
    resolve_path,
    schedule_to_dict,
    write_schedule,
)
from artifact.search import solve_sequential
from artifact.instances import random_problem

DATA = resolve_path("bundled:case_c.toml").parent


@pytest.fixture
def scenario_dir(tmp_path):
    for name in ("case_c.toml", "devices.json", "prices_case_c.csv", "weather_case_c.csv"):
        shutil.copy(DATA / name, tmp_path / name)
    return tmp_path


def test_bundled_case_has_eight_devices_with_battery():
    problem = load_scenario("bundled:case_c.toml")
    assert len(problem.devices) == 7 and problem.battery is not None
    assert problem.grid.horizon_slots == 96
    assert validate_problem(problem) == []


def test_loading_is_deterministic():
    assert load_scenario("bundled:case_b.toml") == load_scenario("bundled:case_b.toml")
    assert load_scenario("bundled:case_b.toml", seed=5) != load_scenario("bundled:case_b.toml")


def test_scenario_without_battery_table(scenario_dir):
    path = scenario_dir / "case_c.toml"
    text = path.read_text()
    path.write_text(text[: text.index("# 2.8 kWh")])
    assert load_scenario(path).battery is None


def test_price_gap_is_named(scenario_dir):
    prices = scenario_dir / "prices_case_c.csv"
    lines = prices.read_text().splitlines()
    prices.write_text("\n".join(lines[:-1]) + "\n")  # 23 hourly rows
    with pytest.raises(InputError, match=r"2022-02-08T23:00:00Z.*slot 92"):
        load_scenario(scenario_dir / "case_c.toml")


def test_missing_scenario_file(tmp_path):
    with pytest.raises(InputError, match="not found"):
        load_scenario(tmp_path / "nope.toml")


def test_weather_length_mismatch(scenario_dir):
    weather = scenario_dir / "weather_case_c.csv"
    weather.write_text("\n".join(weather.read_text().splitlines()[:50]) + "\n")
    with pytest.raises(InputError, match="49 weather records"):
        load_scenario(scenario_dir / "case_c.toml")


def test_weather_json_matches_csv(tmp_path):
    records = load_weather(DATA / "weather_case_a.csv")
    doc = [
        {
            "timestamp": r.timestamp.strftime("%Y-%m-%dT%H:%M:%SZ"),
            "temperature_c": r.temperature_c,
            "dew_point_c": r.dew_point_c,
            "pressure_hpa": r.pressure_hpa,
            "wind_speed_ms": r.wind_speed_ms,
            "dni_wm2": r.dni_wm2,
        }
        for r in records
    ]
    path = tmp_path / "w.json"
    path.write_text(json.dumps(doc))
    assert load_weather(path) == records


def test_unknown_policy_variant():
    with pytest.raises(Exception, match="unknown policy variant"):
        device_from_dict({"device_id": "x", "states": [{"state_id": "S0", "power_w": 0}], "policy": {"variant": "often"}}, 4)


def test_battery_device_points_to_scenario_table():
    with pytest.raises(InputError, match=r"\[battery\]"):
        device_from_dict(
            {"device_id": "b", "states": [{"state_id": "S0", "power_w": 0}], "policy": {"variant": "battery"}}, 4
        )


def test_pattern_spans_expand():
    dev = device_from_dict(
        {
            "device_id": "m",
            "states": [{"state_id": "S0", "power_w": 0}, {"state_id": "S1", "power_w": 900}],
            "policy": {"variant": "pattern", "default": "S0", "spans": [{"state": "S1", "start": 1, "end": 3}]},
        },
        5,
    )
    assert dev.policy.state_per_slot == ("S0", "S1", "S1", "S0", "S0")


def _roundtrip(tmp_path, problem, schedule):
    path = tmp_path / "out.json"
    write_schedule(schedule, path, problem.grid, {"scenario_id": problem.name})
    again, meta = read_schedule(path)
    assert again == schedule
    replayed = evaluate_schedule(problem, list(again.assignments), again.battery_actions)
    assert replayed.total_cost == schedule.total_cost
    return json.loads(path.read_text())


def test_schedule_roundtrip_with_battery(tmp_path):
    problem = random_problem(11, battery=True)
    schedule, _ = solve_sequential(problem)
    doc = _roundtrip(tmp_path, problem, schedule)
    assert len(doc["slots"]) == problem.grid.horizon_slots
    assert doc["totals"]["total_cost_micro"] == sum(s["cost_micro"] for s in doc["slots"])


def test_idle_battery_serializes_flat_charge(tmp_path):
    problem = random_problem(12, battery=True, max_slots=4, min_slots=4)
    n = problem.grid.horizon_slots
    rows = [tuple(d.policy.forced_state(t) or d.state_ids[0] for d in problem.devices) for t in range(n)]
    # evaluate any assignment; validity of policies is not needed for serialization
    schedule = evaluate_schedule(problem, rows, [BatteryAction.IDLE] * n)
    doc = schedule_to_dict(schedule, problem.grid)
    assert len({s["battery_charge_micro_kwh"] for s in doc["slots"]}) == 1
    assert doc["metadata"]["battery_initial_micro_kwh"] == schedule.battery_trajectory[0]


def test_four_slot_document(tmp_path):
    problem = random_problem(5, max_slots=4, min_slots=4, battery=False)
    schedule, _ = solve_sequential(problem)
    doc = _roundtrip(tmp_path, problem, schedule)
    assert [s["slot_index"] for s in doc["slots"]] == [0, 1, 2, 3]


def test_kmeans_separates_two_groups():
    result = kmeans_1d([1, 2, 3, 100, 101, 102], 2)
    assert result.centroids == pytest.approx([2.0, 101.0])
    assert result.boundaries == pytest.approx([51.5])


def test_kmeans_constant_trace():
    assert kmeans_1d([7.5] * 20, 1).centroids == pytest.approx([7.5])


def test_kmeans_needs_enough_distinct_values():
    with pytest.raises(ValueError):
        kmeans_1d([3.0, 3.0, 3.0], 2)


def test_display_trace_recovers_both_states():
    rng = random.Random(4)
    watts = [max(0.0, rng.gauss(0.63, 0.05)) for _ in range(600)] + [rng.gauss(36.36, 1.0) for _ in range(400)]
    rng.shuffle(watts)
    low, high = cluster_power_states(PowerTrace.from_watts("display", watts), 2)
    assert low.power == pytest.approx(0.63, rel=0.05)
    assert high.power == pytest.approx(36.36, rel=0.05)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 3000, allow_nan=False), min_size=4, max_size=60, unique=True), st.randoms())
def test_clustering_ignores_sample_order(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    a = [s.power for s in cluster_power_states(values, 2)]
    b = [s.power for s in cluster_power_states(shuffled, 2)]
    assert a == pytest.approx(b, rel=1e-9, abs=1e-9)
    assert a == sorted(a)


def test_trace_csv(tmp_path):
    path = tmp_path / "fridge.csv"
    path.write_text("timestamp,watts\n2022-02-08T00:00:00Z,1.0\n2022-02-08T00:00:10Z,80.0\n2022-02-08T00:00:20Z,2.0\n")
    trace = load_trace(path)
    assert trace.device_id == "fridge" and list(trace.watts) == [1.0, 80.0, 2.0]


def test_trace_rejects_negative_power():
    with pytest.raises(ValueError):
        PowerTrace.from_watts("x", [1.0, -2.0])
