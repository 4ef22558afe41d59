"""CLI tests: subcommand wiring, artifact emission, exit codes,
error context, and byte-identical reruns."""

import json

import numpy as np
import pytest

from dafnav.cli import main


def run_cli(*argv):
    return main(list(argv))


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    body = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, body


def test_validate_bundled_ok(capsys):
    assert run_cli("validate", "paper2d") == 0
    out = capsys.readouterr().out
    assert "[pass]" in out
    assert "paper2d: ok" in out


def test_validate_unknown_scenario(capsys):
    assert run_cli("validate", "nosuch") == 1
    assert "bundled scenarios" in capsys.readouterr().err


def test_validate_bad_file(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"version": 1}')
    assert run_cli("validate", str(p)) == 1
    err = capsys.readouterr().err
    assert "error:" in err and "$" in err


def test_run_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "art"
    assert run_cli("run", "trap2d", "--out-dir", str(out)) == 0
    csv = out / "trap2d_avoidance_oracle_run00.csv"
    summary = out / "trap2d_avoidance_oracle_summary.json"
    svg = out / "trap2d_avoidance_oracle_trajectories.svg"
    assert csv.exists() and summary.exists() and svg.exists()
    header, body = read_csv(csv)
    assert header == ["t", "p1", "p2", "v1", "v2", "u1", "u2", "d", "L"]
    t = body[:, 0]
    assert np.all(np.diff(t) > 0)
    assert np.all(body[:, 7] > 0)  # clearance column, safe run
    doc = json.loads(summary.read_text())
    assert doc["scenario"] == "trap2d"
    assert doc["runs"][0]["outcome"] == "stalled"
    assert doc["runs"][0]["csv"] == csv.name
    text = capsys.readouterr().out
    assert "stalled" in text


def test_run_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli("run", "trap2d", "--out-dir", str(a), "--no-plot") == 0
    assert run_cli("run", "trap2d", "--out-dir", str(b), "--no-plot") == 0
    fa = a / "trap2d_avoidance_oracle_run00.csv"
    fb = b / "trap2d_avoidance_oracle_run00.csv"
    assert fa.read_bytes() == fb.read_bytes()
    sa = (a / "trap2d_avoidance_oracle_summary.json").read_bytes()
    sb = (b / "trap2d_avoidance_oracle_summary.json").read_bytes()
    assert sa == sb


def test_run_seed_and_horizon_overrides(tmp_path):
    out = tmp_path / "o"
    assert run_cli("run", "trap2d", "--out-dir", str(out), "--no-plot",
                   "--seed", "7", "--t-max", "1.5") == 0
    doc = json.loads((out / "trap2d_avoidance_oracle_summary.json").read_text())
    assert doc["seed"] == 7
    assert doc["t_max"] == 1.5
    assert doc["runs"][0]["outcome"] == "timeout"


def test_run_lidar_mode_without_sensor_block(tmp_path, capsys):
    assert run_cli("run", "trap2d", "--sensor-mode", "lidar",
                   "--out-dir", str(tmp_path / "x")) == 1
    assert "sensor" in capsys.readouterr().err


def test_compare_requires_baseline(capsys):
    assert run_cli("compare", "trap2d") == 1
    err = capsys.readouterr().err
    assert "controllers.baseline" in err


def test_compare_emits_table_and_report(tmp_path, capsys):
    out = tmp_path / "cmp"
    assert run_cli("compare", "compare2d", "--out-dir", str(out)) == 0
    text = capsys.readouterr().out
    assert "avoidance" in text and "baseline" in text
    assert "peak accel" in text
    doc = json.loads((out / "compare2d_compare.json").read_text())
    assert doc["peaks"]["baseline_peak_accel"] > doc["peaks"]["avoidance_peak_accel"]
    assert (out / "compare2d_compare.svg").exists()
    assert (out / "compare2d_avoidance_oracle_run00.csv").exists()
    assert (out / "compare2d_baseline_oracle_run00.csv").exists()


def test_compare_avoidance_against_itself_is_identical(tmp_path):
    # a scenario whose baseline is the avoidance law with the same gains
    doc = {
        "version": 1,
        "dimension": 2,
        "workspace": {"kind": "box", "low": [-4.0, -4.0], "high": [4.0, 4.0]},
        "obstacles": [{"kind": "ball", "center": [0.0, 0.0], "radius": 0.5}],
        "robot_radius": 0.1,
        "epsilon": 0.2,
        "eps1": 0.5,
        "eps2": 1.4,
        "target": [2.0, -2.0],
        "initial_states": [{"position": [-2.0, 1.2]}],
        "controllers": {
            "avoidance": {"k_goal": 10.0, "k_damp": 5.0, "k_avoid": 10.0},
            "baseline": {"kind": "avoidance", "k_goal": 10.0, "k_damp": 5.0,
                         "k_avoid": 10.0},
        },
        "sim": {"t_max": 20.0},
    }
    path = tmp_path / "self.json"
    path.write_text(json.dumps(doc))
    out = tmp_path / "cmp"
    assert run_cli("compare", str(path), "--out-dir", str(out), "--no-plot") == 0
    a = (out / "self_avoidance_oracle_run00.csv").read_bytes()
    b = (out / "self_baseline_oracle_run00.csv").read_bytes()
    assert a == b


def test_analyze_reports_blocking_point(tmp_path, capsys):
    out = tmp_path / "ana"
    assert run_cli("analyze", "trap2d", "--out-dir", str(out),
                   "--probe", "1e-3") == 0
    text = capsys.readouterr().out
    assert "unstable" in text
    doc = json.loads((out / "trap2d_equilibria.json").read_text())
    pts = doc["blocking_points"]
    assert len(pts) == 1
    assert pts[0]["position"] == pytest.approx([-0.6, 0.0], abs=1e-9)
    assert pts[0]["unstable"] is True
    assert pts[0]["probe"]["escaped"] is True


def test_analyze_obstacle_free_scene_is_empty(tmp_path, capsys):
    doc = {
        "version": 1,
        "dimension": 2,
        "workspace": {"kind": "box", "low": [-4.0, -4.0], "high": [4.0, 4.0]},
        "obstacles": [],
        "robot_radius": 0.1,
        "epsilon": 0.2,
        "eps1": 0.5,
        "eps2": 1.4,
        "target": [2.0, -2.0],
        "initial_states": [{"position": [-2.0, 2.0]}],
        "controllers": {"avoidance": {"k_goal": 10.0, "k_damp": 5.0,
                                      "k_avoid": 10.0}},
        "sim": {"t_max": 10.0},
    }
    path = tmp_path / "free.json"
    path.write_text(json.dumps(doc))
    out = tmp_path / "ana"
    assert run_cli("analyze", str(path), "--out-dir", str(out)) == 0
    assert "no blocking points" in capsys.readouterr().out
    parsed = json.loads((out / "free_equilibria.json").read_text())
    assert parsed["blocking_points"] == []


def test_bracket_flags_flip_with_damping(tmp_path):
    out = tmp_path / "ana"
    assert run_cli("analyze", "bracket2d_k068", "--out-dir", str(out)) == 0
    low = json.loads((out / "bracket2d_k068_equilibria.json").read_text())
    assert run_cli("analyze", "bracket2d_k093", "--out-dir", str(out)) == 0
    high = json.loads((out / "bracket2d_k093_equilibria.json").read_text())

    def symmetric_point(doc):
        return min(doc["blocking_points"], key=lambda e: abs(e["position"][0]))

    assert symmetric_point(low)["unstable"] is True
    assert symmetric_point(high)["unstable"] is False
