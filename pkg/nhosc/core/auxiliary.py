"""Auxiliary transformation x = s·y + iη, dτ/dt = μ for the oscillator family.

Integrated in original time t with μ = m₀/(m s²) eliminated:

    s̈ + (ṁ/m)ṡ + ω²s = m₀²ω₀²/(m²s³)      (scale, Ermakov type)
    d/dt(m η̇) = -(m ω² η + λ)              (imaginary shift)
    τ̇ = μ,  İ = ½(m ω² η² + 2λη - m η̇²)    (clock, phase integral)

The phase integral I(t) is the real part of f_τ at ħ = 1; the imaginary part
is i·ln s^{1/2}, stored separately so s^{-1/2} can be applied exactly.
"""

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, Optional, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from nhosc.core.parameters import ParameterSet
from nhosc.shared.config import get_config
from nhosc.shared.exceptions import (
    AuxiliaryError,
    OutOfRange,
    ParameterError,
    SingularSolution,
    ToleranceFailure,
    UnsupportedCase,
)
from nhosc.shared.models import AuxInit

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("t", "tau", "mu", "s", "s_dot", "eta", "eta_dot", "Omega_sq", "f_tau_integral")


@dataclass(frozen=True, eq=False)
class TimeReparametrization:
    """Rescaled clock τ(t) and its rate μ(t) on the mesh."""

    t_mesh: np.ndarray
    tau_values: np.ndarray
    mu_values: np.ndarray


@dataclass(frozen=True)
class AuxPoint:
    """Transformation data at a single time."""

    t: float
    s: float
    s_dot: float
    eta: float
    eta_dot: float
    eta_ddot: float
    tau: float
    mu: float
    log_part: float
    integral: float
    integrand: float


@dataclass(frozen=True)
class Residuals:
    """Constraint residuals: c1, c2 relative; c3 absolute."""

    c1: float
    c2: float
    c3: float


@dataclass(frozen=True, eq=False)
class AuxiliarySolution:
    """
    Solved transformation data on a uniform time mesh.

    Between mesh points every quantity is interpolated by cubic Hermite
    splines built from the stored derivatives, which is exact for the
    constant-parameter closed form.
    """

    reparam: TimeReparametrization
    s_values: np.ndarray
    s_dot_values: np.ndarray
    s_ddot_values: np.ndarray
    eta_values: np.ndarray
    eta_dot_values: np.ndarray
    eta_ddot_values: np.ndarray
    mu_dot_values: np.ndarray
    f_tau_log: np.ndarray
    f_tau_integral: np.ndarray
    f_tau_integrand: np.ndarray
    Omega_sq_values: np.ndarray
    m0: float
    omega0: float
    unit_scale: bool = False
    init: Dict[str, float] = field(default_factory=dict)
    tolerances: Dict[str, float] = field(default_factory=dict)

    @property
    def t_mesh(self) -> np.ndarray:
        return self.reparam.t_mesh

    @property
    def t_span(self) -> Tuple[float, float]:
        return float(self.t_mesh[0]), float(self.t_mesh[-1])

    @cached_property
    def _splines(self) -> Dict[str, CubicHermiteSpline]:
        t = self.t_mesh
        return {
            "s": CubicHermiteSpline(t, self.s_values, self.s_dot_values),
            "s_dot": CubicHermiteSpline(t, self.s_dot_values, self.s_ddot_values),
            "eta": CubicHermiteSpline(t, self.eta_values, self.eta_dot_values),
            "eta_dot": CubicHermiteSpline(t, self.eta_dot_values, self.eta_ddot_values),
            "tau": CubicHermiteSpline(t, self.reparam.tau_values, self.reparam.mu_values),
            "mu": CubicHermiteSpline(t, self.reparam.mu_values, self.mu_dot_values),
            "integral": CubicHermiteSpline(t, self.f_tau_integral, self.f_tau_integrand),
        }

    @cached_property
    def _integrand_spline(self) -> CubicSpline:
        return CubicSpline(self.t_mesh, self.f_tau_integrand)

    @cached_property
    def _omega_sq_spline(self) -> CubicSpline:
        return CubicSpline(self.t_mesh, self.Omega_sq_values)

    @cached_property
    def _eta_dot_spline(self) -> CubicSpline:
        return CubicSpline(self.t_mesh, self.eta_dot_values)

    def check_time(self, t: float) -> None:
        """Raise OutOfRange if t lies outside the mesh."""
        t_a, t_b = self.t_span
        slack = 1e-12 * max(1.0, t_b - t_a)
        if t < t_a - slack or t > t_b + slack:
            raise OutOfRange(t, t_a, t_b)

    def at(self, t: float) -> AuxPoint:
        """Interpolated transformation data at time t."""
        self.check_time(t)
        sp = self._splines
        t = float(t)
        if self.unit_scale:
            s, s_dot, mu, tau, log_part = 1.0, 0.0, 1.0, t, 0.0
        else:
            s = float(sp["s"](t))
            s_dot = float(sp["s_dot"](t))
            mu = float(sp["mu"](t))
            tau = float(sp["tau"](t))
            log_part = 0.5 * float(np.log(s))
        return AuxPoint(
            t=t,
            s=s,
            s_dot=s_dot,
            eta=float(sp["eta"](t)),
            eta_dot=float(sp["eta_dot"](t)),
            eta_ddot=float(sp["eta_dot"](t, 1)),
            tau=tau,
            mu=mu,
            log_part=log_part,
            integral=float(sp["integral"](t)),
            integrand=float(self._integrand_spline(t)),
        )

    def table(self) -> np.ndarray:
        """Mesh data as rows in CSV_COLUMNS order."""
        return np.column_stack([
            self.t_mesh,
            self.reparam.tau_values,
            self.reparam.mu_values,
            self.s_values,
            self.s_dot_values,
            self.eta_values,
            self.eta_dot_values,
            self.Omega_sq_values,
            self.f_tau_integral,
        ])

    def header(self) -> dict:
        """JSON header written next to the CSV table."""
        return {
            "m0": self.m0,
            "omega0": self.omega0,
            "unit_scale": self.unit_scale,
            "init": dict(self.init),
            "tolerances": dict(self.tolerances),
            "mesh_size": int(self.t_mesh.size),
        }


def particular_shift(params: ParameterSet, t0: float) -> Optional[Tuple[float, float]]:
    """
    Non-oscillating shift (η, η̇) at t0, when it exists in closed form.

    For constant m, ω² and polynomial λ the particular solution of
    m η̈ = -m ω² η - λ is η_p = -(1/(mω²)) Σ_k (-1)^k λ^(2k) / ω^(2k).

    Returns:
        (eta0, eta_dot0) or None if the parameters are outside that family
    """
    if not params.is_constant_oscillator():
        return None
    coefficients = params.lam.polynomial_coefficients()
    if coefficients is None:
        return None
    m = float(params.mass.evaluate(t0))
    w2 = float(params.omega_sq.evaluate(t0))

    lam = Polynomial(coefficients)
    series = Polynomial([0.0])
    term, sign, k = lam, 1.0, 0
    while k <= lam.degree() // 2:
        series = series + sign * term / w2 ** k
        term = term.deriv(2)
        sign, k = -sign, k + 1
    eta_p = -series / (m * w2)
    return float(eta_p(t0)), float(eta_p.deriv()(t0))


def _rhs_factory(params: ParameterSet, m0: float, omega0: float):
    """Right-hand side of the (s, ṡ, η, η̇, τ, I) system; vectorized in t."""
    k2 = (m0 * omega0) ** 2

    def rhs(t, y):
        s, s_dot, eta, eta_dot = y[0], y[1], y[2], y[3]
        m = params.mass.evaluate(t)
        m_dot = params.mass.derivative(t)
        w2 = params.omega_sq.evaluate(t)
        lam = params.lam.evaluate(t)
        s_ddot = -(m_dot / m) * s_dot - w2 * s + k2 / (m * m * s ** 3)
        eta_ddot = -(m_dot / m) * eta_dot - w2 * eta - lam / m
        mu = m0 / (m * s * s)
        integrand = 0.5 * (m * w2 * eta * eta + 2.0 * lam * eta - m * eta_dot * eta_dot)
        return np.array([s_dot, s_ddot, eta_dot, eta_ddot, mu, integrand])

    return rhs


def solve_auxiliary(
    params: ParameterSet,
    init: Optional[AuxInit],
    t_span: Tuple[float, float],
    omega0: Optional[float] = None,
    m0: Optional[float] = None,
    mesh_size: Optional[int] = None,
    rtol: Optional[float] = None,
    atol: Optional[float] = None,
) -> AuxiliarySolution:
    """
    Integrate the transformation constraints for a general parameter profile.

    Args:
        params: Hamiltonian profiles (imaginary drive)
        init: Initial s, ṡ, η, η̇; missing shift data selects the particular solution
        t_span: (t_a, t_b) integration window
        omega0: Target frequency ω₀ (default ω(t_a))
        m0: Target mass m₀ (default m(t_a))
        mesh_size: Number of uniform output points
        rtol: Relative tolerance of the embedded RK5(4) pair
        atol: Absolute tolerance

    Returns:
        AuxiliarySolution on the uniform mesh

    Raises:
        SingularSolution: If s collapses below the configured fraction of s0
        ToleranceFailure: If a constraint residual exceeds its limit
    """
    config = get_config()
    if params.drive != "imaginary":
        raise UnsupportedCase("the auxiliary transformation covers the imaginary drive i·λ(t)·x only")

    t_a, t_b = float(t_span[0]), float(t_span[1])
    if not t_b > t_a:
        raise ParameterError(f"t_span must be increasing, got {t_span}")
    params.check_window(t_a, t_b)

    init = init or AuxInit()
    m0 = float(params.mass.evaluate(t_a)) if m0 is None else float(m0)
    omega0 = float(np.sqrt(params.omega_sq.evaluate(t_a))) if omega0 is None else float(omega0)
    if m0 <= 0.0 or omega0 <= 0.0:
        raise ParameterError(f"m0 and omega0 must be positive, got m0={m0}, omega0={omega0}")
    if init.s0 <= 0.0:
        raise ParameterError(f"s0 must be positive, got {init.s0}")

    eta0, eta_dot0 = init.eta0, init.eta_dot0
    particular = particular_shift(params, t_a)
    if eta0 is None:
        eta0 = particular[0] if particular else 0.0
    if eta_dot0 is None:
        eta_dot0 = particular[1] if particular else 0.0

    rtol = config.ode_rtol if rtol is None else rtol
    atol = config.ode_atol if atol is None else atol
    n_mesh = mesh_size or config.aux_mesh_size
    mesh = np.linspace(t_a, t_b, n_mesh)
    s_floor = config.singular_scale_ratio * init.s0

    rhs = _rhs_factory(params, m0, omega0)

    def collapse(t, y):
        return y[0] - s_floor

    collapse.terminal = True
    collapse.direction = -1

    y0 = np.array([init.s0, init.s_dot0, eta0, eta_dot0, t_a, 0.0])
    sol = solve_ivp(rhs, (t_a, t_b), y0, method="RK45", t_eval=mesh,
                    rtol=rtol, atol=atol, events=collapse)
    if sol.status == 1 and sol.t_events[0].size:
        raise SingularSolution(float(sol.t_events[0][0]), float(sol.y_events[0][0][0]))
    if not sol.success:
        raise AuxiliaryError(f"auxiliary integration failed: {sol.message}")
    logger.debug("auxiliary solve: %d RHS evaluations, %d mesh points", sol.nfev, n_mesh)

    s, s_dot, eta, eta_dot, tau, integral = sol.y
    if np.any(s <= s_floor):
        raise SingularSolution(float(mesh[int(np.argmin(s))]), float(np.min(s)))

    derivs = rhs(mesh, sol.y)
    s_ddot, eta_ddot, mu, integrand = derivs[1], derivs[3], derivs[4], derivs[5]
    if np.any(np.diff(tau) <= 0.0):
        raise AuxiliaryError("rescaled time tau is not strictly increasing")

    m = np.asarray(params.mass.evaluate(mesh))
    m_dot = np.asarray(params.mass.derivative(mesh))
    mu_dot = -m0 * (m_dot * s + 2.0 * m * s_dot) / (m * m * s ** 3)
    omega_sq_big = m_dot * s_dot / (m * s) + s_ddot / s
    # fixed point s = μ = 1: take the exact code path
    unit_scale = bool(
        np.max(np.abs(s - 1.0)) < 1e-13
        and np.max(np.abs(s_dot)) < 1e-13
        and np.max(np.abs(mu - 1.0)) < 1e-13
    )

    aux = AuxiliarySolution(
        reparam=TimeReparametrization(mesh, tau, mu),
        s_values=s,
        s_dot_values=s_dot,
        s_ddot_values=s_ddot,
        eta_values=eta,
        eta_dot_values=eta_dot,
        eta_ddot_values=eta_ddot,
        mu_dot_values=mu_dot,
        f_tau_log=0.5 * np.log(s),
        f_tau_integral=integral,
        f_tau_integrand=integrand,
        Omega_sq_values=omega_sq_big,
        m0=m0,
        omega0=omega0,
        unit_scale=unit_scale,
        init={"s0": init.s0, "s_dot0": init.s_dot0, "eta0": eta0, "eta_dot0": eta_dot0},
        tolerances={"rtol": rtol, "atol": atol},
    )

    worst = mesh_residuals(aux, params)
    limits = (config.residual_c1_limit, config.residual_c2_limit, config.residual_c3_limit)
    for name, value, limit in zip(("c1", "c2", "c3"), worst, limits):
        if value >= limit:
            raise ToleranceFailure(f"residual {name}={value:.3e} exceeds {limit:.1e}")
    return aux


def _residual_arrays(aux: AuxiliarySolution, params: ParameterSet, t: np.ndarray) -> Tuple[np.ndarray, ...]:
    sp = aux._splines
    s = sp["s"](t)
    mu = sp["mu"](t)
    eta = sp["eta"](t)
    eta_dot = sp["eta_dot"](t)
    eta_ddot = aux._eta_dot_spline.derivative()(t)
    m = np.asarray(params.mass.evaluate(t))
    m_dot = np.asarray(params.mass.derivative(t))
    w2 = np.asarray(params.omega_sq.evaluate(t))
    lam = np.asarray(params.lam.evaluate(t))
    target = aux.m0 * aux.omega0 ** 2

    c1 = np.abs(m * s * s * mu - aux.m0) / aux.m0
    c2 = np.abs((m * s * s / mu) * (w2 + aux._omega_sq_spline(t)) - target) / target
    c3 = np.abs(m_dot * eta_dot + m * eta_ddot + m * w2 * eta + lam)
    return c1, c2, c3


def residuals(aux: AuxiliarySolution, params: ParameterSet, t: float) -> Residuals:
    """
    Constraint residuals at time t.

    c1 = |m s² μ - m₀|/m₀, c2 = |(m s²/μ)(ω² + Ω²) - m₀ω₀²|/(m₀ω₀²),
    c3 = |d/dt(m η̇) + m ω² η + λ| with η̈ from a spline of the stored η̇.
    """
    aux.check_time(t)
    c1, c2, c3 = _residual_arrays(aux, params, np.asarray([float(t)]))
    return Residuals(float(c1[0]), float(c2[0]), float(c3[0]))


def mesh_residuals(aux: AuxiliarySolution, params: ParameterSet) -> Tuple[float, float, float]:
    """Largest c1, c2, c3 over the whole mesh."""
    c1, c2, c3 = _residual_arrays(aux, params, aux.t_mesh)
    return float(np.max(c1)), float(np.max(c2)), float(np.max(c3))


def phase_f(aux: AuxiliarySolution, params: ParameterSet, y, t: float):
    """
    Phase function f(y, τ(t)) relating ψ to the transformed mode σ.

    f = (1/ħ)[½ m s ṡ y² + i m s η̇ y] + i ln s^{1/2} + I(t)/ħ, using μ s' = ṡ
    and μ η' = η̇.
    """
    p = aux.at(t)
    m = float(params.mass.evaluate(t))
    hbar = params.hbar
    y = np.asarray(y, dtype=complex)
    linear = 1j * m * p.s * p.eta_dot * y
    if aux.unit_scale:
        f = (linear + p.integral) / hbar
    else:
        f = (0.5 * m * p.s * p.s_dot * y * y + linear + p.integral) / hbar + 1j * p.log_part
    return complex(f) if f.ndim == 0 else f


def constant_case_solution(
    m: float,
    omega: float,
    a: float,
    t_span: Tuple[float, float],
    mesh_size: Optional[int] = None,
) -> AuxiliarySolution:
    """
    Closed-form transformation for constant m, ω and λ = a·t.

    s = μ = 1, τ = t, η = -a t/(mω²), and the phase integral
    I(t) = F(t) - F(t_a) with F(t) = -(a²/(2mω⁴))(t + ω²t³/3).
    """
    if m <= 0.0 or omega <= 0.0:
        raise ParameterError(f"m and omega must be positive, got m={m}, omega={omega}")
    t_a, t_b = float(t_span[0]), float(t_span[1])
    if not t_b > t_a:
        raise ParameterError(f"t_span must be increasing, got {t_span}")

    t = np.linspace(t_a, t_b, mesh_size or get_config().aux_mesh_size)
    w2 = omega * omega
    ones, zeros = np.ones_like(t), np.zeros_like(t)

    eta = -a * t / (m * w2)
    eta_dot = np.full_like(t, -a / (m * w2))
    integrand = -(a * a / (2.0 * m * w2)) * (t * t + 1.0 / w2)

    def big_f(tt):
        return -(a * a / (2.0 * m * w2 * w2)) * (tt + w2 * tt ** 3 / 3.0)

    return AuxiliarySolution(
        reparam=TimeReparametrization(t, t.copy(), ones),
        s_values=ones,
        s_dot_values=zeros,
        s_ddot_values=zeros,
        eta_values=eta,
        eta_dot_values=eta_dot,
        eta_ddot_values=zeros,
        mu_dot_values=zeros,
        f_tau_log=zeros,
        f_tau_integral=big_f(t) - big_f(t_a),
        f_tau_integrand=integrand,
        Omega_sq_values=zeros,
        m0=float(m),
        omega0=float(omega),
        unit_scale=True,
        init={"s0": 1.0, "s_dot0": 0.0, "eta0": float(eta[0]), "eta_dot0": float(eta_dot[0])},
        tolerances={"closed_form": 1.0},
    )


def corrupted(aux: AuxiliarySolution, eta_scale: float) -> AuxiliarySolution:
    """Copy with η and η̇ rescaled; a negative control for the residual checks."""
    return replace(
        aux,
        eta_values=aux.eta_values * eta_scale,
        eta_dot_values=aux.eta_dot_values * eta_scale,
        eta_ddot_values=aux.eta_ddot_values * eta_scale,
    )
