"""Closed-form wavefunctions, the exact propagator and its Mehler expansion.

Everything here is expressed through the auxiliary transformation: a physical
point x at time t maps to the complex coordinate y = (x - iη)/s and the clock
τ, where the problem is a time-independent oscillator of mass m₀ and
frequency ω₀. The physical objects are

    ψ_n(x,t) = e^{i f(y,τ)} φ_n(y) e^{-i(n+½)ω₀τ}
    K(x,t; x₀,t₀) = e^{i f(y,τ)} K₀(y,τ; y₀,τ₀) e^{-i f(y₀,τ₀)} / s₀

with φ_n the normalized oscillator mode continued to complex y and K₀ the
oscillator kernel. Hermite values are carried as normalized Hermite functions
and every exponential factor is summed before a single exp, so large |y| does
not overflow.
"""

import logging
import math
from dataclasses import dataclass
from typing import Literal, Optional, Union

import numpy as np
from scipy.integrate import simpson

from nhosc.core.auxiliary import AuxiliarySolution, phase_f
from nhosc.core.numeric import SpatialGrid, WavefunctionGrid
from nhosc.core.parameters import ParameterSet
from nhosc.shared.config import get_config
from nhosc.shared.exceptions import CausticError, IndexTooLarge, UnsupportedCase

logger = logging.getLogger(__name__)

ArrayLike = Union[float, complex, np.ndarray]
InitialPhase = Literal["jacobian", "conjugate"]

_PI_QUARTER = math.pi ** -0.25


def _check_index(n: int) -> None:
    limit = get_config().hermite_max_index
    if n < 0 or n > limit:
        raise IndexTooLarge(n, limit)


def _require_imaginary(params: ParameterSet) -> None:
    if params.drive != "imaginary":
        raise UnsupportedCase(f"closed forms exist for the imaginary drive only, got drive={params.drive!r}")


def _scalar_or_array(values: np.ndarray) -> ArrayLike:
    return complex(values) if np.ndim(values) == 0 else values


@dataclass(frozen=True)
class TransformedPoint:
    """Complex coordinate y and clock τ of a physical point."""

    y: complex
    tau: float
    s: float
    eta: float

    def x(self) -> complex:
        """Physical coordinate s·y + iη (real up to rounding)."""
        return self.s * self.y + 1j * self.eta


def transform(x: float, t: float, aux: AuxiliarySolution) -> TransformedPoint:
    """Map a physical (x, t) to its transformed coordinates."""
    p = aux.at(t)
    return TransformedPoint(y=(x - 1j * p.eta) / p.s, tau=p.tau, s=p.s, eta=p.eta)


def hermite(n: int, z: ArrayLike) -> ArrayLike:
    """
    Physicists' Hermite polynomial H_n(z) by the three-term recurrence.

    Args:
        n: Degree, 0 <= n <= hermite_max_index
        z: Real or complex argument (scalar or array)

    Returns:
        H_n(z), complex

    Raises:
        IndexTooLarge: If n is out of range
    """
    _check_index(n)
    z = np.asarray(z, dtype=complex)
    previous, current = np.zeros_like(z), np.ones_like(z)
    for k in range(n):
        previous, current = current, 2.0 * z * current - 2.0 * k * previous
    return _scalar_or_array(current)


def hermite_functions(n_max: int, z: ArrayLike) -> np.ndarray:
    """
    Normalized Hermite polynomials h_k(z) = π^{-1/4} H_k(z) / sqrt(2^k k!).

    The Gaussian weight is left out; callers fold it into their exponent.

    Returns:
        Array of shape (n_max + 1,) + shape(z)
    """
    _check_index(n_max)
    z = np.asarray(z, dtype=complex)
    table = np.empty((n_max + 1,) + z.shape, dtype=complex)
    table[0] = _PI_QUARTER
    if n_max >= 1:
        table[1] = math.sqrt(2.0) * z * _PI_QUARTER
    for k in range(1, n_max):
        table[k + 1] = math.sqrt(2.0 / (k + 1)) * z * table[k] - math.sqrt(k / (k + 1)) * table[k - 1]
    return table


def sigma_n(n: int, y: ArrayLike, tau: float, m0: float, omega0: float, hbar: float = 1.0) -> ArrayLike:
    """
    Stationary mode of the transformed oscillator at complex y.

    σ_n(y, τ) = (m₀ω₀/πħ)^{1/4} (2ⁿn!)^{-1/2} H_n(κy) e^{-κ²y²/2} e^{-i(n+½)ω₀τ},
    κ = sqrt(m₀ω₀/ħ).
    """
    kappa = math.sqrt(m0 * omega0 / hbar)
    z = kappa * np.asarray(y, dtype=complex)
    h = hermite_functions(n, z)[n]
    values = math.sqrt(kappa) * h * np.exp(-0.5 * z * z - 1j * (n + 0.5) * omega0 * tau)
    return _scalar_or_array(values)


def oscillator_mode(n: int, y: ArrayLike, m0: float, omega0: float, hbar: float = 1.0) -> ArrayLike:
    """φ_n(y): the mode σ_n at τ = 0."""
    return sigma_n(n, y, 0.0, m0, omega0, hbar)


def _initial_log(aux: AuxiliarySolution, params: ParameterSet, y0: np.ndarray, t0: float,
                 initial_phase: InitialPhase) -> np.ndarray:
    """Logarithm of the initial-time factor of the kernel."""
    if initial_phase == "conjugate":
        # f* evaluated at y0: conjugate coefficients, not the argument
        return -1j * np.conj(phase_f(aux, params, np.conj(y0), t0))
    p0 = aux.at(t0)
    return -1j * phase_f(aux, params, y0, t0) - math.log(p0.s)


def psi_n(n: int, x: ArrayLike, t: float, aux: AuxiliarySolution, params: ParameterSet) -> ArrayLike:
    """
    Physical wavefunction ψ_n(x, t).

    The amplitude s^{-1/2} enters through the log part of the phase function;
    with a unit-scale solution and λ = 0 this is exactly the textbook state
    φ_n(x) e^{-i(n+½)ωt}.

    Raises:
        UnsupportedCase: If the drive is not imaginary
        OutOfRange: If t lies outside the auxiliary mesh
    """
    _require_imaginary(params)
    p = aux.at(t)
    kappa = math.sqrt(aux.m0 * aux.omega0 / params.hbar)
    y = (np.asarray(x, dtype=float) - 1j * p.eta) / p.s
    z = kappa * y
    h = hermite_functions(n, z)[n]
    exponent = 1j * phase_f(aux, params, y, t) - 0.5 * z * z - 1j * (n + 0.5) * aux.omega0 * p.tau
    return _scalar_or_array(math.sqrt(kappa) * h * np.exp(exponent))


def dual_mode(n: int, x0: ArrayLike, t0: float, aux: AuxiliarySolution, params: ParameterSet,
              initial_phase: InitialPhase = "jacobian") -> ArrayLike:
    """
    Initial-time factor of the spectral sum, so that K = Σ_n ψ_n(x,t)·dual_n(x₀,t₀).

    dual_n = e^{-i f(y₀,τ₀)} φ_n(y₀) e^{+i(n+½)ω₀τ₀} / s₀; φ_n is not conjugated.
    """
    _require_imaginary(params)
    p0 = aux.at(t0)
    kappa = math.sqrt(aux.m0 * aux.omega0 / params.hbar)
    y0 = (np.asarray(x0, dtype=float) - 1j * p0.eta) / p0.s
    z0 = kappa * y0
    h = hermite_functions(n, z0)[n]
    exponent = _initial_log(aux, params, y0, t0, initial_phase) - 0.5 * z0 * z0 \
        + 1j * (n + 0.5) * aux.omega0 * p0.tau
    return _scalar_or_array(math.sqrt(kappa) * h * np.exp(exponent))


def psi_n_time_derivative(n: int, x: ArrayLike, t: float, aux: AuxiliarySolution,
                          params: ParameterSet) -> ArrayLike:
    """
    ∂ψ_n/∂t at fixed x, differentiated in closed form.

    Available for unit-scale solutions (s ≡ 1, τ = t) with constant m, ω,
    where y = x - iη and f = (i m η̇ y + I)/ħ.

    Raises:
        UnsupportedCase: Outside that family
    """
    _require_imaginary(params)
    if not (aux.unit_scale and params.is_constant_oscillator()):
        raise UnsupportedCase("analytic time derivative needs a unit-scale solution with constant m, omega")
    p = aux.at(t)
    m = float(params.mass.evaluate(t))
    hbar = params.hbar
    omega0 = aux.omega0
    kappa = math.sqrt(aux.m0 * omega0 / hbar)
    y = np.asarray(x, dtype=float) - 1j * p.eta
    z = kappa * y
    table = hermite_functions(n, z)
    h_n = table[n]
    h_prev = table[n - 1] if n >= 1 else np.zeros_like(h_n)

    df_dt = (1j * m * p.eta_ddot * y + m * p.eta_dot ** 2 + p.integrand) / hbar
    mode_slope = kappa * (math.sqrt(2.0 * n) * h_prev - z * h_n)
    bracket = h_n * (1j * df_dt - 1j * (n + 0.5) * omega0) + mode_slope * (-1j * p.eta_dot)
    exponent = 1j * phase_f(aux, params, y, t) - 0.5 * z * z - 1j * (n + 0.5) * omega0 * p.tau
    return _scalar_or_array(math.sqrt(kappa) * bracket * np.exp(exponent))


@dataclass(frozen=True, eq=False)
class PropagatorKernel:
    """
    Exact propagator K(x,t; x₀,t₀) of one parameter set.

    Attributes:
        aux: Solved auxiliary transformation covering both times
        params: Hamiltonian profiles (imaginary drive)
        damping: Abel damping ε >= 0; ω₀Δτ becomes ω₀Δτ - iε
        initial_phase: "jacobian" uses e^{-i f(y₀)}/s₀, "conjugate" uses
            e^{-i f*(y₀)} with the coefficients of f conjugated
    """

    aux: AuxiliarySolution
    params: ParameterSet
    damping: float = 0.0
    initial_phase: InitialPhase = "jacobian"

    def __post_init__(self) -> None:
        _require_imaginary(self.params)
        if self.damping < 0.0:
            raise ValueError(f"damping must be >= 0, got {self.damping}")
        if self.initial_phase not in ("jacobian", "conjugate"):
            raise ValueError(f"unknown initial_phase {self.initial_phase!r}")

    @property
    def kappa_sq(self) -> float:
        return self.aux.m0 * self.aux.omega0 / self.params.hbar

    def phase(self, t: float, t0: float) -> float:
        """Real kernel phase ω₀(τ - τ₀), checked against caustics when undamped."""
        phase = self.aux.omega0 * (self.aux.at(t).tau - self.aux.at(t0).tau)
        if self.damping == 0.0 and abs(math.sin(phase)) < get_config().caustic_guard:
            raise CausticError(phase)
        return phase


def maslov_sign(phase: float) -> int:
    """
    Sign continuing the principal (i sin θ)^{-1/2} across caustics.

    With k = floor(phase/π) the sign is (-1)^{floor((k+1)/2)}; it flips at odd
    multiples of π where i·sin θ crosses the negative real axis.
    """
    k = math.floor(phase / math.pi)
    return -1 if math.floor((k + 1) / 2) % 2 else 1


def _kernel_values(kernel: PropagatorKernel, x: np.ndarray, t: float, x0: np.ndarray, t0: float) -> np.ndarray:
    """K on broadcast arrays x, x0."""
    aux, params = kernel.aux, kernel.params
    phase = kernel.phase(t, t0)
    theta = phase - 1j * kernel.damping
    sin_t, cos_t = np.sin(theta), np.cos(theta)
    k = kernel.kappa_sq

    p, p0 = aux.at(t), aux.at(t0)
    y = (np.asarray(x, dtype=float) - 1j * p.eta) / p.s
    y0 = (np.asarray(x0, dtype=float) - 1j * p0.eta) / p0.s

    exponent = (
        1j * phase_f(aux, params, y, t)
        + _initial_log(aux, params, y0, t0, kernel.initial_phase)
        + (1j * k / (2.0 * sin_t)) * ((y * y + y0 * y0) * cos_t - 2.0 * y * y0)
    )
    amplitude = math.sqrt(k / (2.0 * math.pi)) / np.sqrt(1j * sin_t) * maslov_sign(phase)
    return amplitude * np.exp(exponent)


def propagator(kernel: PropagatorKernel, x: ArrayLike, t: float, x0: ArrayLike, t0: float) -> ArrayLike:
    """
    Evaluate K(x,t; x₀,t₀); x and x0 broadcast against each other.

    Raises:
        CausticError: If sin ω₀(τ-τ₀) vanishes and no damping is set
    """
    return _scalar_or_array(_kernel_values(kernel, x, t, x0, t0))


def mehler_partial_sum(kernel: PropagatorKernel, n_terms: int, x: ArrayLike, t: float,
                       x0: ArrayLike, t0: float) -> ArrayLike:
    """
    Spectral sum Σ_{n=0}^{N} ψ_n(x,t)·dual_n(x₀,t₀)·e^{-ε(n+½)}.

    The terms share one Gaussian and phase prefactor, so the sum runs over
    products of normalized Hermite values only.
    """
    if n_terms < 0:
        raise ValueError(f"number of terms must be >= 0, got {n_terms}")
    aux, params = kernel.aux, kernel.params
    theta = kernel.phase(t, t0) - 1j * kernel.damping
    kappa = math.sqrt(kernel.kappa_sq)

    p, p0 = aux.at(t), aux.at(t0)
    y = (np.asarray(x, dtype=float) - 1j * p.eta) / p.s
    y0 = (np.asarray(x0, dtype=float) - 1j * p0.eta) / p0.s
    y, y0 = np.broadcast_arrays(y, y0)
    z, z0 = kappa * y, kappa * y0

    orders = np.arange(n_terms + 1)
    weights = np.exp(-1j * (orders + 0.5) * theta)
    h = hermite_functions(n_terms, z)
    h0 = hermite_functions(n_terms, z0)
    series = np.tensordot(weights, h * h0, axes=(0, 0))

    prefactor = kappa * np.exp(
        1j * phase_f(aux, params, y, t) - 0.5 * z * z
        + _initial_log(aux, params, y0, t0, kernel.initial_phase) - 0.5 * z0 * z0
    )
    return _scalar_or_array(prefactor * series)


def chirp_alias_distance(kernel: PropagatorKernel, t: float, t0: float, spacing: float) -> float:
    """
    Distance (in x₀) at which the sampled kernel chirp aliases onto itself.

    Poisson summation of the Simpson rule places images of the stationary
    point at multiples of π|sin θ| s₀ / (κ² |cos θ| h) for spacing h.
    """
    phase = kernel.aux.omega0 * (kernel.aux.at(t).tau - kernel.aux.at(t0).tau)
    cos_p = abs(math.cos(phase))
    if cos_p == 0.0:
        return math.inf
    s0 = kernel.aux.at(t0).s
    return math.pi * abs(math.sin(phase)) * s0 * s0 / (kernel.kappa_sq * cos_p * spacing)


def kernel_apply(kernel: PropagatorKernel, psi0: WavefunctionGrid, t: float,
                 out_grid: Optional[SpatialGrid] = None) -> WavefunctionGrid:
    """
    ψ(x,t) = ∫ K(x,t; x₀,t₀) ψ₀(x₀) dx₀ by composite Simpson on psi0's grid.

    Args:
        kernel: Propagator to apply
        psi0: Initial state; psi0.t is the initial time
        t: Final time (earlier than psi0.t for backward propagation)
        out_grid: Output nodes (default: psi0's grid)

    Returns:
        WavefunctionGrid on the output grid at time t

    Raises:
        BoundaryLeak: If psi0's tails exceed the kernel tail ratio
        CausticError: At a caustic of the undamped kernel
    """
    config = get_config()
    psi0.check_boundary(config.kernel_tail_ratio)
    grid_out = out_grid or psi0.grid
    x_in, x_out = psi0.grid.x, grid_out.x

    alias = chirp_alias_distance(kernel, t, psi0.t, psi0.grid.spacing)
    reach = max(abs(grid_out.x_max - psi0.grid.x_min), abs(psi0.grid.x_max - grid_out.x_min))
    if alias < reach:
        logger.warning(
            "input spacing %.3e aliases the kernel chirp at distance %.3g < grid reach %.3g; refine the input grid",
            psi0.grid.spacing, alias, reach,
        )

    rows = max(1, config.kernel_chunk_elements // x_in.size)
    values = np.empty(x_out.size, dtype=complex)
    weighted = psi0.values[None, :]
    for start in range(0, x_out.size, rows):
        block = _kernel_values(kernel, x_out[start:start + rows, None], t, x_in[None, :], psi0.t)
        values[start:start + rows] = simpson(block * weighted, x=x_in, axis=1)
    logger.debug("kernel_apply: %d output nodes, %d quadrature nodes", x_out.size, x_in.size)
    return WavefunctionGrid(grid_out, values, float(t))
