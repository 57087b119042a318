"""Tests for the scenario task runner."""

import json

import pytest

from nhosc.cli.tasks import ScenarioRunner, run_scenario
from nhosc.core.serialization import get_json_backend
from nhosc.shared.models import Scenario
from tests.fixtures.params import scenario_dict


def make_runner(tmp_path, **kwargs):
    return ScenarioRunner(Scenario.model_validate(scenario_dict(**kwargs)), tmp_path / "run")


def test_solve_aux_uses_rk45_for_custom_init(tmp_path):
    runner = make_runner(tmp_path, tasks=["SolveAux"], aux_config={"init": {"s0": 1.2}, "mesh_size": 401})
    outcome = runner.run()
    assert outcome.passed
    assert runner.validation["auxiliary"]["source"] == "rk45"
    assert runner.validation["auxiliary"]["t_span"] == pytest.approx([-0.004, 0.204])


def test_solve_aux_refuses_real_drive(tmp_path):
    runner = make_runner(tmp_path, drive="real", tasks=["SolveAux"])
    outcome = runner.run()
    assert not outcome.passed
    assert outcome.failures[0].task == "SolveAux"


def test_hermitian_energy_supports_both_conventions(tmp_path):
    runner = make_runner(tmp_path, slope=0.0, tasks=["Energy"],
                         energy_config={"states": [0, 1], "times": [0.0, 0.1]})
    assert runner.run().passed
    assert runner.validation["gamma_convention"] == "derived+printed"
    assert runner.validation["energy"]["fd_vs_analytic_derivative"] < 1e-9


def test_hermitian_evolution_gates_norm_drift(tmp_path):
    runner = make_runner(tmp_path, slope=0.0, tasks=["Evolve", "RealityScan"],
                         reality_config={"n_max": 3, "times": [0.0, 0.1], "expect_real": True})
    assert runner.run().passed
    assert runner.validation["evolve"]["norm_drift"] < 1e-8
    assert runner.validation["reality"]["verdict"] == "PASS"


def test_expect_real_gates_reality_scan(tmp_path):
    runner = make_runner(tmp_path, tasks=["RealityScan"],
                         reality_config={"n_max": 1, "times": [0.1], "expect_real": True})
    outcome = runner.run()
    assert [f.task for f in outcome.failures] == ["RealityScan"]


def test_numeric_reality_scan_for_mixed_drive(tmp_path):
    runner = make_runner(tmp_path, drive="mixed", tasks=["RealityScan"],
                         reality_config={"n_max": 1, "times": [0.1, 1.0], "source": "numeric", "expect_real": False})
    assert runner.run().passed
    assert runner.validation["reality"]["verdict"] == "FAIL"


@pytest.mark.slow
def test_kernel_checks(tmp_path):
    runner = make_runner(
        tmp_path,
        tasks=["Kernel"],
        grid_config={"center": 0.0, "half_width": 8.0, "n_points": 4096},
        evolve_config={"t0": 0.0, "t1": 1.0, "dt": 1e-3},
    )
    outcome = runner.run()
    assert outcome.passed, outcome.failures
    kernel = runner.validation["kernel"]
    assert kernel["mehler_rel"] < 1e-8
    assert kernel["composition_rel"] < 1e-5
    assert kernel["delta_l2"] < 1e-4


def test_run_scenario_writes_validation(tmp_path):
    outcome = run_scenario(Scenario.model_validate(scenario_dict(tasks=["PTCheck"])), tmp_path / "pt")
    assert outcome.passed
    assert (tmp_path / "pt" / "validation.json") in outcome.artifacts
    assert (tmp_path / "pt" / "pt.json").exists()


def test_kernel_delta_grid_is_buildable_and_results_survive_failure(tmp_path):
    runner = make_runner(
        tmp_path,
        tasks=["Kernel"],
        kernel_config={"dt_delta": 1e-2, "delta_tolerance": 1e-30},
    )
    outcome = runner.run()
    assert len(outcome.failures) == 1
    assert "delta-limit" in str(outcome.failures[0])
    kernel = runner.validation["kernel"]
    assert kernel["delta_output_points"] >= 64
    assert kernel["mehler_rel"] < 1e-8
    assert kernel["composition_rel"] < 1e-5
    assert "delta_l2_conjugate" in kernel


def test_validation_records_json_backend(tmp_path):
    runner = make_runner(tmp_path, tasks=["PTCheck"])
    runner.run()
    recorded = json.loads((tmp_path / "run" / "validation.json").read_text())
    assert recorded["json_backend"] == get_json_backend()
