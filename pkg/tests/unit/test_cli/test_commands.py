"""Tests for the typer CLI."""

import json

import numpy as np
import pytest
from typer.testing import CliRunner

from nhosc.cli.commands import EXIT_CONFIG_ERROR, EXIT_PASS, EXIT_TASK_FAILURE, app, load_scenario
from nhosc.core.numeric import WavefunctionGrid, build_grid
from nhosc.formatters.reports import write_wavefunction
from nhosc.shared.exceptions import ConfigError
from tests.fixtures.params import make_params, scenario_dict

runner = CliRunner()


def write_scenario(path, data):
    path.write_text(json.dumps(data))
    return path


def test_load_scenario_wraps_validation_errors(tmp_path):
    data = scenario_dict()
    del data["params"]["omega_sq"]
    with pytest.raises(ConfigError, match="omega_sq"):
        load_scenario(write_scenario(tmp_path / "bad.json", data))


def test_load_scenario_rejects_non_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_scenario(path)
    with pytest.raises(ConfigError):
        load_scenario(tmp_path / "missing.json")


def test_run_malformed_scenario_exits_2(tmp_path):
    data = scenario_dict()
    del data["params"]["omega_sq"]
    result = runner.invoke(app, ["run", str(write_scenario(tmp_path / "bad.json", data)),
                                 "--out", str(tmp_path / "out")])
    assert result.exit_code == EXIT_CONFIG_ERROR
    assert "ConfigError" in result.output


def test_run_small_scenario_passes(tmp_path):
    path = write_scenario(tmp_path / "small.json", scenario_dict(
        tasks=["SolveAux", "PTCheck", "Evolve", "Compare", "Energy", "RealityScan"],
        energy_config={"states": [0, 1], "times": [0.0, 0.1]},
        reality_config={"n_max": 2, "times": [0.0, 0.1]},
    ))
    out = tmp_path / "out"
    result = runner.invoke(app, ["run", str(path), "--out", str(out)])
    assert result.exit_code == EXIT_PASS, result.output

    run_dir = out / "unit"
    for name in ("aux.csv", "aux.json", "numeric_final.csv", "analytic_final.csv", "norm_history.csv",
                 "energy.csv", "reality.csv", "reality.json", "pt.json", "validation.json"):
        assert (run_dir / name).exists(), name
    validation = json.loads((run_dir / "validation.json").read_text())
    assert validation["gamma_convention"] == "derived"
    assert validation["reality"]["verdict"] == "FAIL"
    assert validation["pt_class"]["verdict"] == "PTViolating"
    assert validation["compare"]["l2_rel"] < 1e-5
    assert validation["auxiliary"]["source"] == "closed_form"


def test_run_is_deterministic(tmp_path):
    path = write_scenario(tmp_path / "small.json", scenario_dict())
    for out in ("a", "b"):
        assert runner.invoke(app, ["run", str(path), "--out", str(tmp_path / out)]).exit_code == EXIT_PASS
    for name in ("numeric_final.csv", "aux.csv", "norm_history.csv", "validation.json"):
        assert (tmp_path / "a" / "unit" / name).read_bytes() == (tmp_path / "b" / "unit" / name).read_bytes()


def test_run_reports_tolerance_failure(tmp_path):
    path = write_scenario(tmp_path / "strict.json", scenario_dict(compare_config={"tolerance": 1e-12}))
    result = runner.invoke(app, ["run", str(path), "--out", str(tmp_path / "out")])
    assert result.exit_code == EXIT_TASK_FAILURE
    assert "Compare" in result.output


def test_run_without_closed_form_fails_compare(tmp_path):
    path = write_scenario(tmp_path / "mixed.json", scenario_dict(drive="mixed", tasks=["Evolve", "Compare"]))
    result = runner.invoke(app, ["run", str(path), "--out", str(tmp_path / "out")])
    assert result.exit_code == EXIT_TASK_FAILURE
    assert (tmp_path / "out" / "unit" / "numeric_final.csv").exists()


def test_run_rejects_duplicate_names(tmp_path):
    a = write_scenario(tmp_path / "a.json", scenario_dict())
    b = write_scenario(tmp_path / "b.json", scenario_dict())
    result = runner.invoke(app, ["run", str(a), str(b), "--out", str(tmp_path / "out")])
    assert result.exit_code == EXIT_CONFIG_ERROR


def test_run_parallel_jobs(tmp_path):
    a = write_scenario(tmp_path / "a.json", scenario_dict(name="first"))
    b = write_scenario(tmp_path / "b.json", scenario_dict(name="second", slope=0.0))
    result = runner.invoke(app, ["run", str(a), str(b), "--out", str(tmp_path / "out"), "--jobs", "2"])
    assert result.exit_code == EXIT_PASS, result.output
    assert (tmp_path / "out" / "first" / "validation.json").exists()
    assert (tmp_path / "out" / "second" / "validation.json").exists()


def test_compare_identical_dumps(tmp_path):
    grid = build_grid(0.0, 8.0, 128)
    psi = WavefunctionGrid(grid, np.exp(-grid.x ** 2 / 2.0), 0.0)
    path = write_wavefunction(tmp_path / "psi.csv", psi, 0, "h")
    result = runner.invoke(app, ["compare", str(path), str(path)])
    assert result.exit_code == 0
    assert json.loads(result.output) == {"l2_rel": 0.0, "linf_rel": 0.0, "phase_aligned_l2": 0.0}


def test_compare_grid_mismatch_exits_2(tmp_path):
    a = write_wavefunction(tmp_path / "a.csv", WavefunctionGrid(build_grid(0.0, 8.0, 128), np.zeros(128), 0.0),
                           0, "h")
    b = write_wavefunction(tmp_path / "b.csv", WavefunctionGrid(build_grid(0.0, 8.0, 130), np.zeros(130), 0.0),
                           0, "h")
    result = runner.invoke(app, ["compare", str(a), str(b)])
    assert result.exit_code == EXIT_CONFIG_ERROR


def test_pt_check_command(tmp_path):
    path = tmp_path / "params.json"
    path.write_text(json.dumps(make_params(0.1).to_json_dict()))
    result = runner.invoke(app, ["pt-check", str(path), "--window", "3"])
    assert result.exit_code == 0, result.output
    report = json.loads(result.output)
    assert report["verdict"] == "PTViolating"
    assert report["window"] == 3.0


def test_pt_check_hermitian(tmp_path):
    path = tmp_path / "params.json"
    path.write_text(json.dumps(make_params(0.0).to_json_dict()))
    result = runner.invoke(app, ["pt-check", str(path), "--window", "2", "--samples", "50"])
    assert json.loads(result.output)["verdict"] == "Hermitian"
