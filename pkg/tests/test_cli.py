"""End-to-end checks of the command-line front end, driven in-process
through ``cli.main`` so exit codes and printed output are both observable."""
import dataclasses
import json

import numpy as np
import pytest

from mobman.cli import main
from mobman.metrics import compute_metrics
from mobman.simulate import SimLog


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_workspace_json_reports_radii(capsys):
    code, out, _ = run_cli(capsys, "workspace", "--json")
    assert code == 0
    payload = json.loads(out)
    assert payload["planar_radius_min_mm"] == pytest.approx(972.375, abs=0.5)
    assert payload["planar_radius_max_mm"] == pytest.approx(2678.460, abs=0.5)
    assert payload["boundary_samples"] > 0
    assert payload["cloud_samples"] > 0
    assert payload["key_points"] == []


def test_workspace_check_classifies_points(capsys):
    code, out, _ = run_cli(capsys, "workspace",
                           "--check", "1980,0,1185",
                           "--check", "0,0,9999", "--json")
    assert code == 0
    points = json.loads(out)["key_points"]
    assert [p["reachable"] for p in points] == [True, False]


def test_workspace_check_rejects_malformed_spec(capsys):
    code, _, err = run_cli(capsys, "workspace", "--check", "1,2")
    assert code == 1
    assert "error:" in err


def test_ik_json_round_trip(capsys):
    code, out, _ = run_cli(capsys, "ik", "1980", "0", "1185", "--json")
    assert code == 0
    payload = json.loads(out)
    assert payload["joints_deg"] == pytest.approx([0.0, 90.0, 0.0, 0.0],
                                                  abs=1e-9)
    assert payload["residual_mm"] < 1e-9


def test_ik_text_output(capsys):
    code, out, _ = run_cli(capsys, "ik", "1400", "700", "800", "30")
    assert code == 0
    assert "q1 =" in out
    assert "round-trip residual" in out


def test_ik_unreachable_exits_one(capsys):
    code, _, err = run_cli(capsys, "ik", "9000", "0", "0")
    assert code == 1
    assert "error:" in err


def test_plan_writes_json_and_prints_assignments(tmp_path, capsys):
    plan_file = tmp_path / "plan.json"
    code, out, _ = run_cli(capsys, "plan", "--json", str(plan_file))
    assert code == 0
    assert "fire F1 -> A2 (group 1)" in out
    assert "fire F2 -> A3 (group 2)" in out
    payload = json.loads(plan_file.read_text())
    assert payload["circuit"]["lap_time"] == pytest.approx(15.396, abs=1e-9)
    assert len(payload["sweeps"]) == 4
    assert [s["fire"] for s in payload["stops"]] == ["F1", "F2"]
    assert [s["nearest_a"] for s in payload["stops"]] == [2, 3]
    assert [s["group"] for s in payload["stops"]] == [1, 2]
    assert payload["flagged"] == []
    # Stops come back in drive order along the lap.
    dists = [s["path_distance"] for s in payload["stops"]]
    assert dists == sorted(dists)


def test_simulate_then_metrics_round_trip(tmp_path, capsys):
    scenario = tmp_path / "scenario.yaml"
    scenario.write_text("dt: 0.002\nfires: []\n")
    out_dir = tmp_path / "run"
    code, out, _ = run_cli(capsys, "simulate", str(scenario),
                           "--out", str(out_dir))
    assert code == 0
    assert "verdict: PASS" in out
    names = {"timeseries.csv", "metrics.json", "trajectory.csv",
             "tracking_errors.csv", "joint_torques.csv", "wheel_speeds.csv"}
    assert {p.name for p in out_dir.iterdir()} == names

    report_file = tmp_path / "report.json"
    code, out, _ = run_cli(capsys, "metrics", str(out_dir / "timeseries.csv"),
                           "--json", str(report_file))
    assert code == 0
    assert "verdict: PASS" in out
    # The CLI report must equal a direct recomputation from the same log.
    direct = compute_metrics(SimLog.from_csv(out_dir / "timeseries.csv"))
    expected = json.loads(json.dumps(dataclasses.asdict(direct)))
    assert json.loads(report_file.read_text()) == expected


def test_metrics_rejects_malformed_log(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("this,is,not,a,run,log\n1,2,3,4,5,6\n")
    code, _, err = run_cli(capsys, "metrics", str(bad))
    assert code == 1
    assert "error:" in err


def test_bad_scenario_reports_every_problem(tmp_path, capsys):
    scenario = tmp_path / "broken.yaml"
    scenario.write_text("dt: -1\nintegrator: leapfrog\nbogus_key: 3\n")
    code, _, err = run_cli(capsys, "plan", str(scenario))
    assert code == 1
    lines = [l for l in err.splitlines() if l.startswith("error:")]
    assert len(lines) >= 3
    joined = "\n".join(lines)
    assert "dt" in joined
    assert "integrator" in joined
    assert "bogus_key" in joined


def test_yaml_syntax_error_exits_one(tmp_path, capsys):
    scenario = tmp_path / "syntax.yaml"
    scenario.write_text("fires: [unclosed\n")
    code, _, err = run_cli(capsys, "plan", str(scenario))
    assert code == 1
    assert "error:" in err


def test_missing_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main([])
    assert excinfo.value.code == 2
