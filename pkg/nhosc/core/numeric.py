"""Finite-difference propagation of iħ∂ψ/∂t = Hψ with a complex potential.

This is the ground-truth oracle for the closed forms: Crank-Nicolson on a
uniform grid with Dirichlet edges, coefficients taken at the half step, and no
renormalization. The norm drift of a non-Hermitian run is output, not error.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import LinAlgError, solve_banded

from nhosc.core.parameters import ParameterSet
from nhosc.shared.config import get_config
from nhosc.shared.exceptions import BadGridSpec, BoundaryLeak, LinearSolveFailure, ParameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid x_min..x_max with n_points nodes."""

    x_min: float
    x_max: float
    n_points: int

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @cached_property
    def x(self) -> np.ndarray:
        nodes = np.linspace(self.x_min, self.x_max, self.n_points)
        nodes.flags.writeable = False
        return nodes


def build_grid(center: float, half_width: float, n_points: int) -> SpatialGrid:
    """
    Build a uniform grid centred on `center`.

    Raises:
        BadGridSpec: If half_width <= 0 or n_points is below the minimum
    """
    minimum = get_config().min_grid_points
    if not half_width > 0.0:
        raise BadGridSpec(f"half_width must be positive, got {half_width}")
    if n_points < minimum:
        raise BadGridSpec(f"n_points must be >= {minimum}, got {n_points}")
    return SpatialGrid(center - half_width, center + half_width, int(n_points))


@dataclass(frozen=True, eq=False)
class WavefunctionGrid:
    """Complex amplitudes on a grid at one time stamp (read-only values)."""

    grid: SpatialGrid
    values: np.ndarray
    t: float

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=complex)
        if values.shape != (self.grid.n_points,):
            raise BadGridSpec(f"expected {self.grid.n_points} values, got shape {values.shape}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def boundary_ratio(self) -> float:
        """Largest |ψ| among the two outermost nodes per side, relative to max |ψ|."""
        magnitude = np.abs(self.values)
        peak = float(np.max(magnitude))
        if peak == 0.0:
            return 0.0
        edges = max(float(np.max(magnitude[:2])), float(np.max(magnitude[-2:])))
        return edges / peak

    def check_boundary(self, limit: Optional[float] = None) -> "WavefunctionGrid":
        limit = get_config().boundary_ratio if limit is None else limit
        ratio = self.boundary_ratio()
        if ratio >= limit:
            raise BoundaryLeak(ratio, limit)
        return self

    def norm(self) -> float:
        """∫|ψ|² dx (composite Simpson)."""
        return float(simpson(np.abs(self.values) ** 2, x=self.grid.x))


def sample_state(f: Callable[[np.ndarray], np.ndarray], grid: SpatialGrid, t: float = 0.0) -> WavefunctionGrid:
    """
    Sample a callable on the grid nodes.

    Raises:
        BoundaryLeak: If the sampled state does not vanish at the edges
    """
    values = np.broadcast_to(np.asarray(f(grid.x), dtype=complex), (grid.n_points,))
    return WavefunctionGrid(grid, values, float(t)).check_boundary()


def potential(params: ParameterSet, x: np.ndarray, t: float) -> np.ndarray:
    """V(x, t) = ½ m ω² x² + c λ x (complex)."""
    m = float(params.mass.evaluate(t))
    w2 = float(params.omega_sq.evaluate(t))
    lam = float(params.lam.evaluate(t))
    return 0.5 * m * w2 * x * x + params.coupling * lam * x


def apply_hamiltonian(psi: WavefunctionGrid, params: ParameterSet, t: float) -> WavefunctionGrid:
    """
    Hψ with the 5-point fourth-order Laplacian.

    The two outermost nodes per side use lower-order stencils and are not
    meaningful for comparisons.
    """
    v = psi.values
    h2 = psi.grid.spacing ** 2
    lap = np.zeros_like(v)
    lap[2:-2] = (-v[:-4] + 16.0 * v[1:-3] - 30.0 * v[2:-2] + 16.0 * v[3:-1] - v[4:]) / (12.0 * h2)
    lap[1] = (v[0] - 2.0 * v[1] + v[2]) / h2
    lap[-2] = (v[-3] - 2.0 * v[-2] + v[-1]) / h2
    m = float(params.mass.evaluate(t))
    kinetic = -(params.hbar ** 2 / (2.0 * m)) * lap
    return WavefunctionGrid(psi.grid, kinetic + potential(params, psi.grid.x, t) * v, psi.t)


@dataclass
class NormHistory:
    """Norm N(t) and first moment ∫x|ψ|² dx after every step."""

    times: List[float] = field(default_factory=list)
    norms: List[float] = field(default_factory=list)
    first_moments: List[float] = field(default_factory=list)

    def record(self, psi: WavefunctionGrid) -> None:
        density = np.abs(psi.values) ** 2
        x = psi.grid.x
        self.times.append(psi.t)
        self.norms.append(float(simpson(density, x=x)))
        self.first_moments.append(float(simpson(x * density, x=x)))

    def continuity_residual(self, params: ParameterSet) -> float:
        """
        Largest relative mismatch of dN/dt = (2/ħ) Im(c) λ(t) ∫x|ψ|² dx.

        dN/dt is taken by central differences over the recorded steps. The
        mismatch is relative to the largest predicted |dN/dt|, floored at
        1e-3·max N per unit time so a conserved norm compares against rounding.
        """
        t = np.asarray(self.times)
        n = np.asarray(self.norms)
        if t.size < 3:
            return 0.0
        fd = (n[2:] - n[:-2]) / (t[2:] - t[:-2])
        lam = np.asarray(params.lam.evaluate(t[1:-1]))
        predicted = (2.0 / params.hbar) * params.coupling.imag * lam * np.asarray(self.first_moments[1:-1])
        scale = max(float(np.max(np.abs(predicted))), 1e-3 * float(np.max(n)))
        return float(np.max(np.abs(fd - predicted)) / scale)

    def drift(self) -> float:
        """max |N(t) - N(t₀)| / N(t₀)."""
        n = np.asarray(self.norms)
        return float(np.max(np.abs(n - n[0])) / n[0]) if n.size else 0.0


@dataclass
class EvolutionResult:
    """Final state plus snapshots and the step-wise norm history."""

    final: WavefunctionGrid
    snapshots: List[WavefunctionGrid]
    history: NormHistory


def _check_step(params: ParameterSet, t_start: float, t_final: float, dt: float) -> None:
    if not dt > 0.0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if t_final < t_start:
        raise ParameterError(f"cannot evolve backwards from {t_start} to {t_final}")
    params.check_window(t_start, t_final)
    ts = np.linspace(t_start, t_final, 1001)
    omega_max = math.sqrt(float(np.max(params.omega_sq.evaluate(ts))))
    limit = 2.0 * math.pi / omega_max / get_config().steps_per_period
    if dt > limit:
        raise ParameterError(f"dt={dt} exceeds accuracy limit {limit:.3e} (2π/ω_max per {get_config().steps_per_period:g} steps)")


def evolve_with_history(
    psi: WavefunctionGrid,
    params: ParameterSet,
    t_final: float,
    dt: float,
    snapshot_every: Optional[int] = None,
) -> EvolutionResult:
    """
    Crank-Nicolson propagation from psi.t to t_final.

    The step count is ceil((t_final - t)/dt) with the step shrunk to land on
    t_final exactly. Snapshots are kept every `snapshot_every` steps and always
    at t_final.

    Raises:
        BoundaryLeak: If the state leaks to the edges before or after
        LinearSolveFailure: If the tridiagonal solve breaks down
    """
    psi.check_boundary()
    _check_step(params, psi.t, t_final, dt)

    history = NormHistory()
    history.record(psi)
    span = t_final - psi.t
    if span == 0.0:
        return EvolutionResult(psi, [psi], history)
    n_steps = max(1, math.ceil(span / dt - 1e-9))
    step = span / n_steps

    grid = psi.grid
    x = grid.x
    hbar = params.hbar
    h2 = grid.spacing ** 2
    alpha = 1j * step / (2.0 * hbar)
    inner = slice(1, -1)
    v = np.array(psi.values)
    v[0] = v[-1] = 0.0
    snapshots: List[WavefunctionGrid] = []
    ab = np.zeros((3, grid.n_points - 2), dtype=complex)

    for k in range(n_steps):
        t_mid = psi.t + (k + 0.5) * step
        m = float(params.mass.evaluate(t_mid))
        if not m > 0.0:
            raise ParameterError(f"mass must be positive, got {m} at t={t_mid:.6g}")
        kin = hbar * hbar / (2.0 * m * h2)
        diag = 2.0 * kin + potential(params, x[inner], t_mid)

        h_psi = diag * v[inner] - kin * (v[:-2] + v[2:])
        rhs = v[inner] - alpha * h_psi
        ab[0, 1:] = -alpha * kin
        ab[1, :] = 1.0 + alpha * diag
        ab[2, :-1] = -alpha * kin
        try:
            solution = solve_banded((1, 1), ab, rhs, check_finite=False)
        except (LinAlgError, ValueError) as exc:
            raise LinearSolveFailure(f"tridiagonal solve failed at t={t_mid:.6g}: {exc}") from exc
        if not np.all(np.isfinite(solution)):
            raise LinearSolveFailure(f"non-finite amplitudes at t={t_mid:.6g}")
        v[inner] = solution

        t_now = t_final if k == n_steps - 1 else psi.t + (k + 1) * step
        state = WavefunctionGrid(grid, v, t_now)
        history.record(state)
        if k == n_steps - 1 or (snapshot_every and (k + 1) % snapshot_every == 0):
            snapshots.append(state)

    logger.debug("evolved %d steps of %.3e from t=%.6g to t=%.6g", n_steps, step, psi.t, t_final)
    final = snapshots[-1].check_boundary()
    return EvolutionResult(final, snapshots, history)


def evolve(psi: WavefunctionGrid, params: ParameterSet, t_final: float, dt: float) -> WavefunctionGrid:
    """Crank-Nicolson propagation to t_final; see evolve_with_history."""
    return evolve_with_history(psi, params, t_final, dt).final


class TrajectoryCache:
    """
    States along one numeric trajectory, evolved lazily.

    Calling the cache with increasing times evolves forward from the latest
    cached state at or before the requested time. Only the `keep` most recent
    states are held; the default covers one five-point difference stencil.
    """

    def __init__(self, psi0: WavefunctionGrid, params: ParameterSet, dt: float, keep: int = 5):
        if keep < 1:
            raise ParameterError(f"keep must be >= 1, got {keep}")
        self.params = params
        self.dt = dt
        self.keep = keep
        self._states: Dict[float, WavefunctionGrid] = {self._key(psi0.t): psi0}

    @staticmethod
    def _key(t: float) -> float:
        return round(float(t), 12)

    def __call__(self, t: float) -> WavefunctionGrid:
        key = self._key(t)
        if key in self._states:
            return self._states[key]
        earlier = [k for k in self._states if k <= key]
        if not earlier:
            raise ParameterError(f"t={t} precedes the oldest cached state at {min(self._states)}")
        start = self._states[max(earlier)]
        state = evolve(start, self.params, float(t), self.dt)
        self._states[key] = state
        while len(self._states) > self.keep:
            del self._states[min(self._states)]
        return state

    def __len__(self) -> int:
        return len(self._states)
