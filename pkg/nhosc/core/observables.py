"""Norms, overlaps and the energy expectation value.

⟨E⟩ = ∫ψ* iħ∂ψ/∂t dx / ∫ψ*ψ dx is kept complex. For any state its imaginary
part obeys the sum rule Im⟨E⟩ = Im(c)·λ(t)·⟨x⟩, since the kinetic and real
potential terms are Hermitian; the reality scan reports that part as data.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import simpson

from nhosc.core.analytic import psi_n, psi_n_time_derivative, sigma_n
from nhosc.core.auxiliary import AuxiliarySolution
from nhosc.core.numeric import (
    SpatialGrid,
    TrajectoryCache,
    WavefunctionGrid,
    apply_hamiltonian,
    sample_state,
)
from nhosc.core.parameters import ParameterSet
from nhosc.shared.config import get_config
from nhosc.shared.exceptions import GridMismatch, ParameterError, UnsupportedCase

logger = logging.getLogger(__name__)

StateAt = Callable[[float], WavefunctionGrid]
Convention = Literal["derived", "printed"]


class EnergyMethod(str, Enum):
    """How ∂ψ/∂t is obtained."""

    ANALYTIC_DERIVATIVE = "AnalyticDerivative"
    FINITE_DIFFERENCE = "FiniteDifference"


def _same_grid(a: WavefunctionGrid, b: WavefunctionGrid) -> None:
    if a.grid != b.grid:
        raise GridMismatch(f"grids differ: {a.grid} vs {b.grid}")
    if abs(a.t - b.t) > 1e-12 * max(1.0, abs(a.t)):
        raise GridMismatch(f"time stamps differ: {a.t!r} vs {b.t!r}")


def inner_product(a: WavefunctionGrid, b: WavefunctionGrid) -> complex:
    """
    ⟨a|b⟩ = ∫ conj(a)·b dx by composite Simpson.

    Raises:
        GridMismatch: If the states live on different grids or times
    """
    _same_grid(a, b)
    return complex(simpson(np.conj(a.values) * b.values, x=a.grid.x))


def norm(state: WavefunctionGrid) -> float:
    """N = ∫|ψ|² dx."""
    return float(simpson(np.abs(state.values) ** 2, x=state.grid.x))


def position_expectation(state: WavefunctionGrid) -> float:
    """⟨x⟩ = ∫x|ψ|² dx / ∫|ψ|² dx."""
    density = np.abs(state.values) ** 2
    x = state.grid.x
    return float(simpson(x * density, x=x) / simpson(density, x=x))


def fd_time_derivative(state_at: StateAt, t: float, dt_fd: float) -> Tuple[WavefunctionGrid, np.ndarray]:
    """
    ψ(t) and the fourth-order central difference
    [ψ(t-2h) - 8ψ(t-h) + 8ψ(t+h) - ψ(t+2h)]/(12h).

    States are requested in increasing time so forward-only trajectories
    evolve along a single path.
    """
    h = dt_fd
    samples = [state_at(t + k * h) for k in (-2, -1, 0, 1, 2)]
    v = [s.values for s in samples]
    return samples[2], (v[0] - 8.0 * v[1] + 8.0 * v[3] - v[4]) / (12.0 * h)


def energy_expectation(
    state_at: StateAt,
    t: float,
    dt_fd: Optional[float] = None,
    hbar: float = 1.0,
    derivative_at: Optional[StateAt] = None,
) -> complex:
    """
    Complex energy expectation ⟨ψ|iħ∂ψ/∂t⟩ / ⟨ψ|ψ⟩.

    Args:
        state_at: Callable t -> WavefunctionGrid; queried at t and t ± h, t ± 2h
        t: Evaluation time
        dt_fd: Finite-difference step h (default from config)
        hbar: Reduced Planck constant
        derivative_at: Callable t -> ∂ψ/∂t on the same grid; skips differencing

    Returns:
        ⟨E⟩ with its imaginary part intact
    """
    if derivative_at is not None:
        psi, dpsi = state_at(t), derivative_at(t).values
    else:
        psi, dpsi = fd_time_derivative(state_at, t, dt_fd or get_config().fd_step)
    x = psi.grid.x
    numerator = simpson(np.conj(psi.values) * 1j * hbar * dpsi, x=x)
    denominator = simpson(np.abs(psi.values) ** 2, x=x)
    return complex(numerator / denominator)


def hamiltonian_expectation(psi: WavefunctionGrid, params: ParameterSet, t: float) -> complex:
    """⟨ψ|Hψ⟩ / ⟨ψ|ψ⟩ with the grid Hamiltonian; no time differencing."""
    return inner_product(psi, apply_hamiltonian(psi, params, t)) / inner_product(psi, psi)


# Closed forms for constant m, ω and λ = a·t

def _constant_case(params: ParameterSet, n: int):
    if n not in (0, 1):
        raise UnsupportedCase(f"closed-form energies exist for n in {{0, 1}}, got n={n}")
    slope = params.linear_drive_slope()
    if params.drive != "imaginary" or slope is None or not params.is_constant_oscillator():
        raise UnsupportedCase("closed-form energies need constant m, omega and lambda = a*t")
    m = float(params.mass.evaluate(0.0))
    omega = math.sqrt(float(params.omega_sq.evaluate(0.0)))
    return m, omega, slope


def gamma_derived(t: float, params: ParameterSet) -> float:
    """γ(t) = I(t)/ħ from the phase integral: -(a²t/(2ħmω⁴))(1 + ω²t²/3)."""
    m, omega, a = _constant_case(params, 0)
    return -(a * a * t / (2.0 * params.hbar * m * omega ** 4)) * (1.0 + omega ** 2 * t * t / 3.0)


def gamma_derived_dot(t: float, params: ParameterSet) -> float:
    m, omega, a = _constant_case(params, 0)
    return -(a * a / (2.0 * params.hbar * m * omega ** 4)) * (1.0 + omega ** 2 * t * t)


def gamma_printed(t: float, params: ParameterSet) -> float:
    """Printed form a²t/(2ħmω⁴)(1 - ω²t²/3)."""
    m, omega, a = _constant_case(params, 0)
    return (a * a * t / (2.0 * params.hbar * m * omega ** 4)) * (1.0 - omega ** 2 * t * t / 3.0)


def gamma_printed_dot(t: float, params: ParameterSet) -> float:
    m, omega, a = _constant_case(params, 0)
    return (a * a / (2.0 * params.hbar * m * omega ** 4)) * (1.0 - omega ** 2 * t * t)


def _shift(t: float, params: ParameterSet, aux: Optional[AuxiliarySolution]):
    """(η, η̇, İ) from aux when given, else from the particular solution."""
    m, omega, a = _constant_case(params, 0)
    if aux is not None:
        p = aux.at(t)
        return p.eta, p.eta_dot, p.integrand
    w2 = omega * omega
    return -a * t / (m * w2), -a / (m * w2), -(a * a / (2.0 * m * w2)) * (t * t + 1.0 / w2)


def closed_form_energy(
    n: int,
    t: float,
    params: ParameterSet,
    aux: Optional[AuxiliarySolution] = None,
    convention: Convention = "derived",
) -> float:
    """
    Real closed-form ⟨E_n⟩ for n in {0, 1}.

    "derived" gives (n+½)ħω - İ(t) = (n+½)ħω - ħγ̇(t) with γ from the phase
    integral. "printed" evaluates the printed displays with the printed γ:
    ½ħω - ħγ̇ - (ma/ω)η̇ for n = 0 and the bracketed n = 1 expression.

    Raises:
        UnsupportedCase: For n >= 2 or parameters outside the constant case
    """
    m, omega, a = _constant_case(params, n)
    hbar = params.hbar
    eta, eta_dot, integrand = _shift(t, params, aux)
    if convention == "derived":
        return (n + 0.5) * hbar * omega - integrand
    if n == 0:
        return 0.5 * hbar * omega - hbar * gamma_printed_dot(t, params) - (m * a / omega) * eta_dot
    bracket = ((3.0 * hbar ** 2 * omega ** 4 + 2.0 * a * a) - 2.0 * a * hbar ** 1.5 * omega ** 1.5 / math.sqrt(m)) \
        / (hbar ** 2 * omega ** 4 + 2.0 * a * a)
    return 1.5 * hbar * omega - hbar * gamma_printed_dot(t, params) - m * omega * eta_dot * bracket


def closed_form_energy_imag(n: int, t: float, params: ParameterSet,
                            aux: Optional[AuxiliarySolution] = None) -> float:
    """
    Im⟨E_n⟩ = λ(t)⟨x⟩_n for n in {0, 1}.

    n = 0: m ω η η̇; n = 1: η η̇ (m ω + ħ/D) with D = η̇²/ω² + ħ/(2mω) + η².
    """
    m, omega, _ = _constant_case(params, n)
    eta, eta_dot, _ = _shift(t, params, aux)
    if n == 0:
        return m * omega * eta * eta_dot
    spread = eta_dot ** 2 / omega ** 2 + params.hbar / (2.0 * m * omega) + eta ** 2
    return eta * eta_dot * (m * omega + params.hbar / spread)


def closed_form_norm(t: float, params: ParameterSet, aux: Optional[AuxiliarySolution] = None) -> float:
    """N₀(t) = exp[(m/ħ)(ω η² + η̇²/ω)] for the ground state."""
    m, omega, _ = _constant_case(params, 0)
    eta, eta_dot, _ = _shift(t, params, aux)
    return math.exp((m / params.hbar) * (omega * eta * eta + eta_dot * eta_dot / omega))


def has_closed_form(params: ParameterSet, n: int) -> bool:
    try:
        _constant_case(params, n)
    except UnsupportedCase:
        return False
    return True


@dataclass
class EnergyReport:
    """⟨E⟩ samples over (n, t) with closed-form comparisons and reality diagnostics."""

    t_samples: List[float] = field(default_factory=list)
    states: List[int] = field(default_factory=list)
    E_values: List[complex] = field(default_factory=list)
    E_closed: List[Optional[float]] = field(default_factory=list)
    E_closed_paper: List[Optional[float]] = field(default_factory=list)
    gamma_dot: List[Optional[float]] = field(default_factory=list)
    sum_rule: List[float] = field(default_factory=list)
    method: EnergyMethod = EnergyMethod.FINITE_DIFFERENCE
    hbar_omega0: float = 1.0
    tolerance: float = 1e-7

    @property
    def max_imag_rel(self) -> float:
        """max |Im E| / (|Re E| + ħω₀)."""
        if not self.E_values:
            return 0.0
        return max(abs(e.imag) / (abs(e.real) + self.hbar_omega0) for e in self.E_values)

    @property
    def sum_rule_residual(self) -> float:
        return max(self.sum_rule, default=0.0)

    @property
    def verdict(self) -> str:
        return "PASS" if self.max_imag_rel < self.tolerance else "FAIL"

    def rows(self) -> List[tuple]:
        """(t, n, re_E, im_E, E_closed_paper, E_closed_derived) per sample."""
        return [
            (t, n, e.real, e.imag, printed, derived)
            for t, n, e, printed, derived in zip(
                self.t_samples, self.states, self.E_values, self.E_closed_paper, self.E_closed
            )
        ]

    def summary(self) -> Dict[str, object]:
        return {
            "max_imag_rel": self.max_imag_rel,
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "method": self.method.value,
            "sum_rule_residual": self.sum_rule_residual,
            "samples": len(self.E_values),
        }


def energy_window(
    n_max: int,
    t_grid: Sequence[float],
    aux: AuxiliarySolution,
    params: ParameterSet,
    dt_fd: float,
    points_per_width: int = 40,
) -> SpatialGrid:
    """
    Quadrature grid holding every ψ_n (n <= n_max) at the scan times.

    Half-width (10 + 2√n_max)·sqrt(ħ/(m₀ω₀))·s_max plus the shift excursions
    |η| and |η̇|/ω₀; spacing is the oscillator length over points_per_width.
    """
    width = math.sqrt(params.hbar / (aux.m0 * aux.omega0))
    times = [t + k * dt_fd for t in t_grid for k in (-2, 0, 2)]
    points = [aux.at(t) for t in times]
    s_max = max(p.s for p in points)
    excursion = max(2.0 * abs(p.eta) + abs(p.eta_dot) / aux.omega0 for p in points)
    half_width = (10.0 + 2.0 * math.sqrt(n_max)) * width * s_max + excursion
    n_points = 2 * int(math.ceil(half_width * points_per_width / (width * min(p.s for p in points)))) + 1
    return SpatialGrid(-half_width, half_width, max(n_points, get_config().min_grid_points))


def reality_scan(
    n_max: int,
    t_grid: Sequence[float],
    params: ParameterSet,
    aux: Optional[AuxiliarySolution] = None,
    source: Literal["analytic", "numeric"] = "analytic",
    grid: Optional[SpatialGrid] = None,
    dt_fd: Optional[float] = None,
    dt: float = 1e-4,
    method: EnergyMethod = EnergyMethod.FINITE_DIFFERENCE,
    tolerance: Optional[float] = None,
) -> EnergyReport:
    """
    ⟨E⟩ for ψ_0..ψ_{n_max} across t_grid.

    The analytic source evaluates the closed-form ψ_n (needs aux covering
    t ± 2·dt_fd). The numeric source starts each n from the stationary mode
    of the undriven oscillator at min(t_grid) - 2·dt_fd and evolves it with
    Crank-Nicolson, so it also covers drives without closed forms.

    Returns:
        EnergyReport; PASS iff max_imag_rel < tolerance
    """
    config = get_config()
    h = dt_fd or config.fd_step
    hbar = params.hbar
    times = sorted(float(t) for t in t_grid)
    if not times:
        raise ParameterError("reality scan needs at least one time")

    if source == "analytic":
        if aux is None:
            raise ParameterError("analytic reality scan needs an auxiliary solution")
        omega0 = aux.omega0
        grid = grid or energy_window(n_max, times, aux, params, h)
    else:
        if grid is None:
            raise ParameterError("numeric reality scan needs a spatial grid")
        if method is EnergyMethod.ANALYTIC_DERIVATIVE:
            raise UnsupportedCase("numeric states have no analytic time derivative")
        omega0 = math.sqrt(float(params.omega_sq.evaluate(times[0])))

    report = EnergyReport(method=method, hbar_omega0=hbar * omega0,
                          tolerance=config.reality_tolerance if tolerance is None else tolerance)

    for n in range(n_max + 1):
        derivative_at: Optional[StateAt] = None
        if source == "analytic":
            def state_at(tt: float, n: int = n) -> WavefunctionGrid:
                return WavefunctionGrid(grid, psi_n(n, grid.x, tt, aux, params), tt)

            if method is EnergyMethod.ANALYTIC_DERIVATIVE:
                def derivative_at(tt: float, n: int = n) -> WavefunctionGrid:
                    return WavefunctionGrid(grid, psi_n_time_derivative(n, grid.x, tt, aux, params), tt)
        else:
            t_start = times[0] - 2.0 * h
            m = float(params.mass.evaluate(t_start))
            w = math.sqrt(float(params.omega_sq.evaluate(t_start)))
            start = sample_state(lambda x, n=n: sigma_n(n, x, 0.0, m, w, hbar), grid, t_start)
            state_at = TrajectoryCache(start, params, dt)

        for t in times:
            energy = energy_expectation(state_at, t, h, hbar, derivative_at)
            psi = state_at(t)
            drift = params.coupling.imag * float(params.lam.evaluate(t)) * position_expectation(psi)
            report.t_samples.append(t)
            report.states.append(n)
            report.E_values.append(energy)
            report.sum_rule.append(abs(energy.imag - drift) / (abs(energy.real) + hbar * omega0))
            if has_closed_form(params, n):
                report.E_closed.append(closed_form_energy(n, t, params, aux, "derived"))
                report.E_closed_paper.append(closed_form_energy(n, t, params, aux, "printed"))
                report.gamma_dot.append(gamma_derived_dot(t, params))
            else:
                report.E_closed.append(None)
                report.E_closed_paper.append(None)
                report.gamma_dot.append(None)
        logger.debug("reality scan n=%d: %d times", n, len(times))

    logger.info("reality scan (%s): max_imag_rel=%.3e verdict=%s", source, report.max_imag_rel, report.verdict)
    return report


@dataclass(frozen=True)
class StateDistance:
    """Relative distances between two states on one grid."""

    l2_rel: float
    linf_rel: float
    phase_aligned_l2: float

    def as_dict(self) -> Dict[str, float]:
        return {"l2_rel": self.l2_rel, "linf_rel": self.linf_rel, "phase_aligned_l2": self.phase_aligned_l2}


def state_distance(a: WavefunctionGrid, b: WavefunctionGrid) -> StateDistance:
    """
    Distances of a from the reference b.

    phase_aligned_l2 first rotates a by the phase of ⟨a|b⟩, removing one
    global phase.

    Raises:
        GridMismatch: If the states live on different grids or times
    """
    _same_grid(a, b)
    x = b.grid.x
    ref = math.sqrt(norm(b))
    peak = float(np.max(np.abs(b.values)))
    diff = a.values - b.values
    l2 = math.sqrt(float(simpson(np.abs(diff) ** 2, x=x))) / ref if ref > 0.0 else 0.0
    linf = float(np.max(np.abs(diff))) / peak if peak > 0.0 else 0.0
    overlap = inner_product(a, b)
    rotation = overlap / abs(overlap) if abs(overlap) > 0.0 else 1.0
    aligned = a.values * rotation - b.values
    l2_aligned = math.sqrt(float(simpson(np.abs(aligned) ** 2, x=x))) / ref if ref > 0.0 else 0.0
    return StateDistance(l2, linf, l2_aligned)
