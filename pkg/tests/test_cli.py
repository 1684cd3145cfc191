import json
import os

import numpy as np
import pytest

from capnmpc.cli import main, validation_report
from capnmpc.dynamics import load_model
from conftest import FIXTURES


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def small_run_doc(tmp_path, out_name="out"):
    return {
        "scenario": "scenario1",
        "seed": 0,
        "output_dir": str(tmp_path / out_name),
        "scenario_overrides": {"episode_length": 60},
        "solver": {"N": 80, "H": 6},
    }


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_run_scenario1_success(tmp_path, capsys):
    cfg = write_config(tmp_path, small_run_doc(tmp_path))
    assert main(["run", "--config", cfg]) == 0
    out = tmp_path / "out"
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["success"] is True
    assert metrics["collision"] is False
    assert metrics["seed"] == 0
    assert metrics["config_echo"]["solver"]["N"] == 80
    assert (out / "trajectory.csv").exists() and (out / "distances.csv").exists()


def test_run_trajectory_columns_finite(tmp_path):
    cfg = write_config(tmp_path, small_run_doc(tmp_path))
    assert main(["run", "--config", cfg]) == 0
    rows = (tmp_path / "out" / "trajectory.csv").read_text().strip().splitlines()
    assert rows[0] == "t,px,py,v,psi,a,delta"
    data = np.array([[float(x) for x in row.split(",")] for row in rows[1:]])
    assert np.isfinite(data).all()
    assert data.shape[1] == 7


def test_run_rejects_zero_particles(tmp_path, capsys):
    doc = small_run_doc(tmp_path)
    doc["solver"]["N"] = 0
    cfg = write_config(tmp_path, doc)
    assert main(["run", "--config", cfg]) == 1
    assert "N" in capsys.readouterr().err


def test_run_dotted_overrides_win(tmp_path):
    cfg = write_config(tmp_path, small_run_doc(tmp_path))
    out2 = str(tmp_path / "out2")
    assert main(["run", "--config", cfg, "--output_dir", out2,
                 "--solver.N", "60"]) == 0
    metrics = json.loads((tmp_path / "out2" / "metrics.json").read_text())
    assert metrics["config_echo"]["solver"]["N"] == 60


def test_run_obstacle_on_goal_fails_with_metrics(tmp_path):
    doc = {
        "seed": 1,
        "output_dir": str(tmp_path / "blocked"),
        "scenario": {
            "name": "blocked-goal",
            "road": {"kind": "straight", "width": 10.0},
            "obstacles": [{"kind": "static", "x": 30.0, "y": 0.0}],
            "ego_init": [0.0, 0.0, 5.0, 0.0],
            "goal": [30.0, 0.0, 0.0, 0.0],
            "episode_length": 50,
            "goal_tolerance": 2.0,
            "reference_speed": 6.0,
        },
        "solver": {"N": 60, "H": 6},
    }
    cfg = write_config(tmp_path, doc)
    assert main(["run", "--config", cfg]) == 2
    metrics = json.loads((tmp_path / "blocked" / "metrics.json").read_text())
    assert metrics["success"] is False
    assert metrics["collision"] or metrics["steps_to_goal"] is None


def test_run_byte_identical_outputs(tmp_path):
    doc = small_run_doc(tmp_path, "a")
    cfg = write_config(tmp_path, doc, "a.json")
    assert main(["run", "--config", cfg]) == 0
    doc_b = dict(doc, output_dir=str(tmp_path / "b"))
    cfg_b = write_config(tmp_path, doc_b, "b.json")
    assert main(["run", "--config", cfg_b]) == 0
    for name in ("trajectory.csv", "distances.csv"):
        assert read(tmp_path / "a" / name) == read(tmp_path / "b" / name)


def test_missing_config_is_config_error(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.json")]) == 1
    assert "not found" in capsys.readouterr().err


def test_unknown_solver_key_rejected(tmp_path, capsys):
    doc = small_run_doc(tmp_path)
    doc["solver"]["gamma"] = 3
    cfg = write_config(tmp_path, doc)
    assert main(["run", "--config", cfg]) == 1
    assert "gamma" in capsys.readouterr().err


def test_validate_model_fixture_fails_threshold(capsys):
    # the hand-built passthrough net ignores heading/steering, so its error
    # over the full validation box is far above the acceptance threshold
    path = os.path.join(FIXTURES, "passthrough_mlp.json")
    assert main(["validate-model", "--weights", path, "--samples", "500"]) == 2
    out = capsys.readouterr().out
    assert "normalized RMSE" in out and "FAIL" in out


def test_validate_model_zero_samples_is_config_error(capsys):
    path = os.path.join(FIXTURES, "passthrough_mlp.json")
    assert main(["validate-model", "--weights", path, "--samples", "0"]) == 1


def test_validate_model_missing_weights(tmp_path):
    assert main(["validate-model", "--weights", str(tmp_path / "none.json")]) == 1


def test_validation_report_structure():
    model = load_model(os.path.join(FIXTURES, "passthrough_mlp.json"))
    report = validation_report(model, 200, 0, 4.0)
    assert len(report["rmse"]) == 4
    assert report["normalized_rmse"] > 0
    assert np.isfinite(report["rmse"]).all()


def test_oracle_lq_cli_smoke(capsys):
    # tiny run: prints the report; threshold pass not required at this size
    code = main(["oracle-lq", "--particles", "400", "--seeds", "2"])
    out = capsys.readouterr().out
    assert "dense-solve oracle" in out
    assert "mean error" in out
    assert code in (0, 2)
