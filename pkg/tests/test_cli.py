import csv
import json

import pytest

from artifact.cli import EXIT_BUDGET, EXIT_INPUT, EXIT_INVALID, EXIT_OK, main
from artifact.ingestion import resolve_path


def _fields(out):
    line = out.strip().splitlines()[-1]
    return dict(part.split("=", 1) for part in line.split())


def test_schedule_writes_json_and_summary(tmp_path, capsys):
    out = tmp_path / "a.json"
    assert main(["schedule", "--scenario", "bundled:case_a.toml", "--no-battery", "--out", str(out)]) == EXIT_OK
    summary = _fields(capsys.readouterr().out)
    doc = json.loads(out.read_text())
    assert summary["status"] == "ok" and summary["battery"] == "false"
    assert int(summary["total_cost_micro"]) == doc["totals"]["total_cost_micro"]
    assert doc["metadata"]["solver"] == "memopt"


def test_parallel_one_worker_matches_memopt(capsys):
    costs = []
    for flags in (["--solver", "memopt"], ["--solver", "parallel", "--threads", "1"]):
        assert main(["schedule", "--scenario", "bundled:case_a.toml", "--no-battery", *flags]) == EXIT_OK
        costs.append(_fields(capsys.readouterr().out)["total_cost_micro"])
    assert costs[0] == costs[1]


def test_missing_scenario_leaves_no_output(tmp_path, capsys):
    out = tmp_path / "s.json"
    assert main(["schedule", "--scenario", str(tmp_path / "missing.toml"), "--out", str(out)]) == EXIT_INPUT
    assert not out.exists()
    assert "missing.toml" in capsys.readouterr().err


def test_budget_exit_code(capsys):
    code = main(["schedule", "--scenario", "bundled:case_a.toml", "--no-battery", "--node-budget", "5"])
    assert code == EXIT_BUDGET


def test_bad_thread_count():
    assert main(["schedule", "--scenario", "bundled:case_a.toml", "--solver", "parallel", "--threads", "0"]) == EXIT_INPUT


def test_validate_reports_invalid_scenario(tmp_path, capsys):
    data = resolve_path("bundled:case_c.toml").parent
    for name in ("prices_case_c.csv", "weather_case_c.csv"):
        (tmp_path / name).write_bytes((data / name).read_bytes())
    devices = json.loads((data / "devices.json").read_text())
    devices[0]["states"][1]["power_w"] = -10.0
    (tmp_path / "devices.json").write_text(json.dumps(devices))
    (tmp_path / "case_c.toml").write_text((data / "case_c.toml").read_text())
    assert main(["validate", "--scenario", str(tmp_path / "case_c.toml")]) == EXIT_INVALID
    captured = capsys.readouterr()
    assert _fields(captured.out)["violations"] == "1"
    assert devices[0]["device_id"] in captured.err


def test_validate_bundled(capsys):
    assert main(["validate", "--scenario", "bundled:case_b.toml"]) == EXIT_OK
    assert _fields(capsys.readouterr().out)["devices"] == "7"


def test_empty_matrix_gives_header_only(tmp_path, capsys):
    matrix = tmp_path / "m.toml"
    matrix.write_text('variants = ["memopt"]\n')
    out = tmp_path / "b.csv"
    assert main(["bench", "--matrix", str(matrix), "--out", str(out)]) == EXIT_OK
    rows = list(csv.reader(out.open()))
    assert len(rows) == 1 and rows[0][:3] == ["instance_id", "variant", "threads"]


def test_bench_small_matrix(tmp_path, capsys):
    matrix = tmp_path / "m.toml"
    matrix.write_text(
        'variants = ["sequential", "parallel"]\nthreads = [1, 2]\niterations = 2\n'
        '[[instances]]\nscenario = "bundled:case_a.toml"\nbattery = false\n'
    )
    out = tmp_path / "b.csv"
    assert main(["bench", "--matrix", str(matrix), "--out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 2 + 2 * 2
    assert {r["total_cost"] for r in rows} == {rows[0]["total_cost"]}
    seq_nodes = {r["nodes_expanded"] for r in rows if r["variant"] == "sequential"}
    assert len(seq_nodes) == 1


def test_predict_gen_calm_sunny_day(tmp_path, capsys):
    out = tmp_path / "gen.csv"
    assert main(["predict-gen", "--scenario", "bundled:case_c.toml", "--out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 96
    assert all(float(r["wind_w"]) == 0.0 for r in rows)
    assert float(rows[48]["pv_w"]) > 0.0  # noon
    assert float(rows[0]["pv_w"]) == 0.0  # midnight


def test_gen_prosumers_is_seeded(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["gen-prosumers", "--scenario", "bundled:case_c.toml", "--seed", "3", "--out", str(out)]) == EXIT_OK
    assert a.read_text() == b.read_text()
    assert _fields(capsys.readouterr().out)["seed"] == "3"


def test_profile_device(tmp_path, capsys):
    trace = tmp_path / "kettle.csv"
    lines = ["timestamp,watts"] + [f"2022-02-08T00:{i // 6:02d}:{(i % 6) * 10:02d}Z,{w}" for i, w in enumerate([1, 2, 3, 100, 101, 102])]
    trace.write_text("\n".join(lines) + "\n")
    out = tmp_path / "states.json"
    assert main(["profile-device", "--trace", str(trace), "--out", str(out)]) == EXIT_OK
    fields = _fields(capsys.readouterr().out)
    assert fields["centroids"] == "2.0000,101.0000"
    assert [s["power_w"] for s in json.loads(out.read_text())["states"]] == [2.0, 101.0]


def test_unknown_subcommand_exits_nonzero():
    with pytest.raises(SystemExit) as exc:
        main(["launch"])
    assert exc.value.code != 0
