"""Exception hierarchy for nhosc."""


class NhoscError(Exception):
    """Base exception for all nhosc errors."""
    pass


# Parameter errors

class ProfileError(NhoscError):
    """Base for time-profile evaluation failures."""
    pass


class OutOfRange(ProfileError):
    """Tabulated profile evaluated outside its time table."""

    def __init__(self, t: float, first: float, last: float):
        self.t = t
        self.first = first
        self.last = last
        super().__init__(f"t={t!r} outside tabulated range [{first!r}, {last!r}]")


class ParameterError(NhoscError):
    """Invalid Hamiltonian parameters (non-positive mass or frequency, bad window)."""
    pass


# Auxiliary (transformation) errors

class AuxiliaryError(NhoscError):
    """Base for auxiliary-equation failures."""
    pass


class SingularSolution(AuxiliaryError):
    """Scale factor collapsed; the coordinate transformation degenerates."""

    def __init__(self, t: float, s: float):
        self.t = t
        self.s = s
        super().__init__(f"scale factor s={s:.3e} at t={t:.6g} is singular")


class ToleranceFailure(AuxiliaryError):
    """A constraint residual exceeded its limit on the solution mesh."""
    pass


# Analytic errors

class AnalyticError(NhoscError):
    """Base for closed-form evaluation failures."""
    pass


class IndexTooLarge(AnalyticError):
    """Hermite index beyond the double-precision guard."""

    def __init__(self, n: int, limit: int):
        self.n = n
        self.limit = limit
        super().__init__(f"Hermite index {n} exceeds limit {limit}")


class CausticError(AnalyticError):
    """Kernel evaluated at (or too close to) a caustic, sin[w0(tau - tau0)] = 0."""

    def __init__(self, phase: float):
        self.phase = phase
        super().__init__(f"kernel phase w0*dtau={phase:.9g} is on a caustic")


class UnsupportedCase(AnalyticError):
    """Closed form requested outside the parameter family it covers."""
    pass


# Numeric errors

class NumericError(NhoscError):
    """Base for grid propagation failures."""
    pass


class BadGridSpec(NumericError):
    """Grid request violates the size or width constraints."""
    pass


class BoundaryLeak(NumericError):
    """Wavefunction does not vanish at the grid edges."""

    def __init__(self, ratio: float, limit: float):
        self.ratio = ratio
        self.limit = limit
        super().__init__(f"boundary amplitude ratio {ratio:.3e} exceeds {limit:.1e}")


class LinearSolveFailure(NumericError):
    """Tridiagonal solve broke down."""
    pass


class GridMismatch(NumericError):
    """Two wavefunctions live on different grids or time stamps."""
    pass


# CLI errors

class CLIError(NhoscError):
    """User-facing CLI error."""
    pass


class ConfigError(CLIError):
    """Scenario file violates the schema."""
    pass


class TaskFailure(CLIError):
    """A scenario task breached its tolerance."""

    def __init__(self, task: str, message: str):
        self.task = task
        super().__init__(f"{task}: {message}")
