"""Scenario task runners.

Tasks run in the order listed in the scenario and share state through the
runner: the auxiliary solution feeds everything analytic, the evolved state
feeds Compare. Tolerance breaches are collected as TaskFailure messages; the
remaining tasks still run so one invocation reports every failure.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from scipy.integrate import simpson

from nhosc.core.analytic import (
    PropagatorKernel,
    chirp_alias_distance,
    kernel_apply,
    mehler_partial_sum,
    propagator,
    psi_n,
    psi_n_time_derivative,
    sigma_n,
)
from nhosc.core.auxiliary import AuxiliarySolution, constant_case_solution, mesh_residuals, solve_auxiliary
from nhosc.core.numeric import (
    EvolutionResult,
    SpatialGrid,
    WavefunctionGrid,
    build_grid,
    evolve_with_history,
    sample_state,
)
from nhosc.core.observables import (
    EnergyMethod,
    closed_form_energy,
    energy_expectation,
    energy_window,
    gamma_derived,
    gamma_printed,
    has_closed_form,
    reality_scan,
    state_distance,
)
from nhosc.core.parameters import PTVerdict, pt_classify
from nhosc.core.serialization import get_json_backend, parameter_hash
from nhosc.formatters.reports import (
    ENERGY_COLUMNS,
    write_aux_table,
    write_energy_report,
    write_json,
    write_norm_history,
    write_table,
    write_wavefunction,
)
from nhosc.shared.config import get_config
from nhosc.shared.exceptions import BadGridSpec, NhoscError, TaskFailure
from nhosc.shared.models import Scenario, TaskName

logger = logging.getLogger(__name__)

CONTINUITY_LIMIT = 1e-6
SUM_RULE_LIMIT = 1e-6
HERMITIAN_DRIFT_LIMIT = 1e-8


@dataclass
class RunOutcome:
    """Result of one scenario run."""

    name: str
    failures: List[TaskFailure] = field(default_factory=list)
    artifacts: List[Path] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


class ScenarioRunner:
    """Executes the tasks of one scenario and writes their artifacts to out_dir."""

    def __init__(self, scenario: Scenario, out_dir: Path):
        self.scenario = scenario
        self.params = scenario.params
        self.out_dir = out_dir
        self.param_hash = parameter_hash(scenario.params)
        self.aux: Optional[AuxiliarySolution] = None
        self.evolution: Optional[EvolutionResult] = None
        self.validation: Dict[str, Any] = {
            "scenario": scenario.name,
            "parameter_hash": self.param_hash,
            "json_backend": get_json_backend(),
            "shift_equation": "d/dt(m eta_dot) = -(m omega^2 eta + lambda)",
            "inner_kernel": "feynman: (y^2 + y0^2) cos(theta) - 2 y y0",
            "initial_phase": "jacobian: exp(-i f(y0, tau0)) / s0",
            "mode_phase": "exp(-i (n + 1/2) omega0 tau)",
            "continuity_sign": "dN/dt = +(2/hbar) Im(c) lambda <x> N",
        }
        self.outcome = RunOutcome(scenario.name)

    # Plumbing

    def _path(self, name: str) -> Path:
        return self.out_dir / name

    def _record(self, path: Path) -> None:
        self.outcome.artifacts.append(path)

    def _fail(self, task: TaskName, message: str) -> None:
        failure = TaskFailure(task.value, message)
        logger.error("%s", failure)
        self.outcome.failures.append(failure)

    @property
    def _analytic(self) -> bool:
        return self.params.drive == "imaginary"

    @property
    def _fd_margin(self) -> float:
        cfg = self.scenario
        return 4.0 * max(cfg.energy_config.dt_fd, cfg.reality_config.dt_fd)

    def _grid(self) -> SpatialGrid:
        g = self.scenario.grid_config
        if g is None:
            raise BadGridSpec("this task needs a grid_config")
        return build_grid(g.center, g.half_width, g.n_points)

    def _require_aux(self) -> AuxiliarySolution:
        if self.aux is None:
            self.solve_aux()
        return self.aux

    # Tasks

    def run(self) -> RunOutcome:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        handlers = {
            TaskName.SOLVE_AUX: self.solve_aux,
            TaskName.EVOLVE: self.evolve,
            TaskName.COMPARE: self.compare,
            TaskName.ENERGY: self.energy,
            TaskName.REALITY_SCAN: self.reality,
            TaskName.PT_CHECK: self.pt_check,
            TaskName.KERNEL: self.kernel,
        }
        for task in self.scenario.tasks:
            logger.info("[%s] running %s", self.scenario.name, task.value)
            try:
                handlers[task]()
            except TaskFailure as e:
                logger.error("%s", e)
                self.outcome.failures.append(e)
            except NhoscError as e:
                self._fail(task, str(e))
        self._record(write_json(self._path("validation.json"), self.validation))
        return self.outcome

    def solve_aux(self) -> None:
        """Closed form when available, RK45 integration otherwise; padded by the FD stencil."""
        if self.aux is not None:
            return
        if not self._analytic:
            raise TaskFailure(TaskName.SOLVE_AUX.value, f"no auxiliary transformation for drive={self.params.drive!r}")
        cfg = self.scenario.aux_config
        ev = self.scenario.evolve_config
        span = (ev.t0 - self._fd_margin, ev.t1 + self._fd_margin)
        slope = self.params.linear_drive_slope()
        default_init = (
            cfg.init.s0 == 1.0 and cfg.init.s_dot0 == 0.0
            and cfg.init.eta0 is None and cfg.init.eta_dot0 is None
        )
        m = float(self.params.mass.evaluate(ev.t0))
        omega = math.sqrt(float(self.params.omega_sq.evaluate(ev.t0)))
        targets_default = cfg.m0 in (None, m) and cfg.omega0 in (None, omega)
        if cfg.closed_form and self.params.is_constant_oscillator() and slope is not None \
                and default_init and targets_default:
            self.aux = constant_case_solution(m, omega, slope, span, cfg.mesh_size)
            source = "closed_form"
        else:
            self.aux = solve_auxiliary(self.params, cfg.init, span, cfg.omega0, cfg.m0, cfg.mesh_size)
            source = "rk45"
        c1, c2, c3 = mesh_residuals(self.aux, self.params)
        self.validation["auxiliary"] = {"source": source, "c1": c1, "c2": c2, "c3": c3, "t_span": list(span)}
        self._record(write_aux_table(self._path("aux.csv"), self.aux))

    def _initial_state(self, grid: SpatialGrid, t0: float) -> WavefunctionGrid:
        n = self.scenario.evolve_config.state
        if self._analytic:
            aux = self._require_aux()
            return sample_state(lambda x: psi_n(n, x, t0, aux, self.params), grid, t0)
        m = float(self.params.mass.evaluate(t0))
        omega = math.sqrt(float(self.params.omega_sq.evaluate(t0)))
        return sample_state(lambda x: sigma_n(n, x, 0.0, m, omega, self.params.hbar), grid, t0)

    def evolve(self) -> None:
        ev = self.scenario.evolve_config
        grid = self._grid()
        psi0 = self._initial_state(grid, ev.t0)
        self.evolution = evolve_with_history(psi0, self.params, ev.t1, ev.dt, ev.snapshot_every)
        history = self.evolution.history

        for k, snap in enumerate(self.evolution.snapshots):
            write_wavefunction(self._path(f"snapshots/psi_{k:05d}.csv"), snap, ev.state, self.param_hash)
        self._record(write_wavefunction(self._path("numeric_final.csv"), self.evolution.final, ev.state,
                                        self.param_hash))
        self._record(write_norm_history(self._path("norm_history.csv"), history))

        continuity = history.continuity_residual(self.params)
        drift = history.drift()
        self.validation["evolve"] = {
            "steps": len(history.times) - 1,
            "norm_final": history.norms[-1],
            "norm_drift": drift,
            "continuity_residual": continuity,
        }
        if continuity >= CONTINUITY_LIMIT:
            self._fail(TaskName.EVOLVE, f"continuity residual {continuity:.3e} exceeds {CONTINUITY_LIMIT:.0e}")
        hermitian = pt_classify(self.params, max(abs(ev.t0), abs(ev.t1))).verdict is PTVerdict.HERMITIAN
        if hermitian and drift >= HERMITIAN_DRIFT_LIMIT:
            self._fail(TaskName.EVOLVE, f"norm drift {drift:.3e} of a Hermitian run exceeds {HERMITIAN_DRIFT_LIMIT:.0e}")

    def compare(self) -> None:
        if self.evolution is None:
            raise TaskFailure(TaskName.COMPARE.value, "no evolved state to compare")
        if not self._analytic:
            raise TaskFailure(TaskName.COMPARE.value, f"no closed form for drive={self.params.drive!r}")
        numeric = self.evolution.final
        aux = self._require_aux()
        n = self.scenario.evolve_config.state
        analytic = WavefunctionGrid(numeric.grid, psi_n(n, numeric.grid.x, numeric.t, aux, self.params), numeric.t)
        self._record(write_wavefunction(self._path("analytic_final.csv"), analytic, n, self.param_hash))

        distance = state_distance(numeric, analytic)
        tolerance = self.scenario.compare_config.tolerance
        self.validation["compare"] = dict(distance.as_dict(), tolerance=tolerance)
        if distance.l2_rel >= tolerance:
            self._fail(TaskName.COMPARE, f"l2_rel {distance.l2_rel:.3e} exceeds {tolerance:.1e}")

    def energy(self) -> None:
        """⟨E⟩ of ψ_n against both closed-form conventions."""
        if not self._analytic:
            raise TaskFailure(TaskName.ENERGY.value, f"no closed form for drive={self.params.drive!r}")
        cfg = self.scenario.energy_config
        aux = self._require_aux()
        grid = energy_window(max(cfg.states), cfg.times, aux, self.params, cfg.dt_fd)
        rows = []
        worst = {"derived": 0.0, "printed": 0.0}
        fd_vs_analytic: Optional[float] = None
        has_derivative = aux.unit_scale and self.params.is_constant_oscillator()
        for n in cfg.states:
            def state_at(t: float, n: int = n) -> WavefunctionGrid:
                return WavefunctionGrid(grid, psi_n(n, grid.x, t, aux, self.params), t)

            for t in cfg.times:
                e = energy_expectation(state_at, t, cfg.dt_fd, self.params.hbar)
                if has_derivative:
                    def derivative_at(tt: float, n: int = n) -> WavefunctionGrid:
                        return WavefunctionGrid(grid, psi_n_time_derivative(n, grid.x, tt, aux, self.params), tt)

                    exact = energy_expectation(state_at, t, hbar=self.params.hbar, derivative_at=derivative_at)
                    fd_vs_analytic = max(fd_vs_analytic or 0.0, abs(e - exact))
                derived = printed = None
                if has_closed_form(self.params, n):
                    derived = closed_form_energy(n, t, self.params, aux, "derived")
                    printed = closed_form_energy(n, t, self.params, aux, "printed")
                    worst["derived"] = max(worst["derived"], abs(e.real - derived))
                    worst["printed"] = max(worst["printed"], abs(e.real - printed))
                rows.append((t, n, e.real, e.imag, printed, derived))
        self._record(write_table(self._path("energy.csv"), ENERGY_COLUMNS, rows))

        if not has_closed_form(self.params, max(cfg.states)):
            self.validation["gamma_convention"] = "not evaluated (no closed form)"
            return
        supported = [name for name, err in worst.items() if err < cfg.tolerance]
        self.validation["gamma_convention"] = "+".join(supported) if supported else "neither"
        self.validation["energy"] = {
            "max_abs_error_derived": worst["derived"],
            "max_abs_error_printed": worst["printed"],
            "tolerance": cfg.tolerance,
            "fd_vs_analytic_derivative": fd_vs_analytic,
            "gamma_derived_at_t1": gamma_derived(cfg.times[-1], self.params),
            "gamma_printed_at_t1": gamma_printed(cfg.times[-1], self.params),
        }
        if "derived" not in supported:
            self._fail(TaskName.ENERGY, f"Re<E> differs from the derived closed form by {worst['derived']:.3e}")

    def reality(self) -> None:
        cfg = self.scenario.reality_config
        grid = self._grid() if cfg.source == "numeric" else None
        aux = self._require_aux() if self._analytic else None
        report = reality_scan(
            cfg.n_max, cfg.times, self.params, aux,
            source=cfg.source, grid=grid, dt_fd=cfg.dt_fd, dt=self.scenario.evolve_config.dt,
            method=EnergyMethod.FINITE_DIFFERENCE,
        )
        self._record(write_energy_report(self._path("reality.csv"), report))
        self.validation["reality"] = report.summary()

        if report.sum_rule_residual >= SUM_RULE_LIMIT:
            self._fail(TaskName.REALITY_SCAN,
                       f"Im<E> violates the sum rule by {report.sum_rule_residual:.3e}")
        if cfg.expect_real is True and report.verdict != "PASS":
            self._fail(TaskName.REALITY_SCAN, f"expected real energies, max_imag_rel={report.max_imag_rel:.3e}")
        if cfg.expect_real is False and report.verdict != "FAIL":
            self._fail(TaskName.REALITY_SCAN, f"expected complex energies, max_imag_rel={report.max_imag_rel:.3e}")

    def pt_check(self) -> None:
        ev = self.scenario.evolve_config
        window = max(abs(ev.t0), abs(ev.t1))
        result = pt_classify(self.params, window)
        self.validation["pt_class"] = {
            "verdict": result.verdict.value,
            "evidence": result.evidence,
            "offender": result.offender,
            "window": window,
        }
        self._record(write_json(self._path("pt.json"), self.validation["pt_class"]))

    def kernel(self) -> None:
        """Mehler convergence, composition and delta limit of the exact propagator."""
        if not self._analytic:
            raise TaskFailure(TaskName.KERNEL.value, f"no propagator for drive={self.params.drive!r}")
        cfg = self.scenario.kernel_config
        ev = self.scenario.evolve_config
        aux = self._require_aux()
        t0 = ev.t0
        t_end = min(t0 + 0.7, ev.t1)
        t_mid = 0.5 * (t0 + t_end)
        damped = PropagatorKernel(aux, self.params, damping=cfg.damping)
        half = PropagatorKernel(aux, self.params, damping=0.5 * cfg.damping)
        results: Dict[str, Any] = {"damping": cfg.damping}

        exact = propagator(damped, 0.3, t_end, -0.2, t0)
        series = mehler_partial_sum(damped, cfg.mehler_terms, 0.3, t_end, -0.2, t0)
        results["mehler_rel"] = abs(series - exact) / abs(exact)
        if results["mehler_rel"] >= cfg.mehler_tolerance:
            self._fail(TaskName.KERNEL, f"Mehler sum error {results['mehler_rel']:.3e}")

        grid = self._grid()
        x1 = grid.x
        worst = 0.0
        for x, x0 in ((-0.5, 0.1), (0.3, 0.1), (0.8, -0.4)):
            inner = propagator(half, x, t_end, x1, t_mid) * propagator(half, x1, t_mid, x0, t0)
            composed = complex(simpson(inner, x=x1))
            direct = propagator(damped, x, t_end, x0, t0)
            worst = max(worst, abs(composed - direct) / abs(direct))
        results["composition_rel"] = worst
        if worst >= cfg.composition_tolerance:
            self._fail(TaskName.KERNEL, f"composition error {worst:.3e}")

        self.validation["kernel"] = results
        results.update(self._delta_limit(aux, cfg.dt_delta, t0))
        if results["delta_l2"] >= cfg.delta_tolerance:
            self._fail(TaskName.KERNEL, f"delta-limit error {results['delta_l2']:.3e}")

    def _delta_limit(self, aux: AuxiliarySolution, dt: float, t0: float) -> Dict[str, float]:
        """
        Apply K over dt to ψ₀(·, t₀) and compare with ψ₀ itself.

        The input grid is refined until the kernel chirp no longer aliases
        within the grid reach. Both initial-phase readings are reported; only
        the jacobian one is gated.
        """
        g = self.scenario.grid_config
        out = build_grid(g.center, min(3.0, 0.5 * g.half_width), get_config().min_grid_points + 1)
        jacobian = PropagatorKernel(aux, self.params)
        reach = 0.5 * (out.x_max - out.x_min) + g.half_width
        spacing = chirp_alias_distance(jacobian, t0 + dt, t0, 1.0) / (1.05 * reach)
        n_in = 2 * int(math.ceil(g.half_width / spacing)) + 1
        fine = build_grid(g.center, g.half_width, max(n_in, g.n_points))
        psi0 = sample_state(lambda x: psi_n(0, x, t0, aux, self.params), fine, t0)
        target = WavefunctionGrid(out, psi_n(0, out.x, t0, aux, self.params), t0 + dt)

        errors: Dict[str, float] = {"delta_input_points": float(fine.n_points), "delta_output_points": float(out.n_points)}
        conjugate = PropagatorKernel(aux, self.params, initial_phase="conjugate")
        for name, kernel in (("delta_l2", jacobian), ("delta_l2_conjugate", conjugate)):
            applied = kernel_apply(kernel, psi0, t0 + dt, out_grid=out)
            errors[name] = state_distance(applied, target).l2_rel
        return errors


def run_scenario(scenario: Scenario, out_dir: Path) -> RunOutcome:
    """Run every task of a scenario; artifacts land in out_dir."""
    logger.debug("running %s with log level %s", scenario.name, get_config().log_level)
    return ScenarioRunner(scenario, out_dir).run()
