"""Time-dependent Hamiltonian coefficients and PT classification.

The Hamiltonian is H = p²/2m(t) + m(t)ω²(t)x²/2 + c·λ(t)·x with c = i for the
non-Hermitian family. Profiles are pydantic models so a ParameterSet can be
read straight from a scenario file:

    {"mass": {"kind": "constant", "value": 1.0},
     "omega_sq": {"kind": "constant", "value": 1.0},
     "lambda": {"kind": "linear", "slope": 0.1},
     "hbar": 1.0}
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Annotated, Any, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator
from scipy.interpolate import CubicSpline

from nhosc.shared.config import get_config
from nhosc.shared.exceptions import OutOfRange, ParameterError

logger = logging.getLogger(__name__)

TimeLike = Union[float, np.ndarray]

COUPLINGS = {
    "imaginary": 1j,
    "real": 1.0 + 0j,
    "mixed": 1j * (1.0 + 1j),
}


def _shaped(values: np.ndarray, t: TimeLike) -> TimeLike:
    """Return a Python float for scalar input, the array otherwise."""
    if np.ndim(t) == 0:
        return float(values)
    return values


def _horner(coefficients: List[float], t: TimeLike) -> np.ndarray:
    """Evaluate sum c_k t^k, coefficients in ascending order."""
    t_arr = np.asarray(t, dtype=float)
    result = np.zeros_like(t_arr)
    for c in reversed(coefficients):
        result = result * t_arr + c
    return result


class _Profile(BaseModel, ABC):
    """Common behaviour of the profile kinds."""

    model_config = ConfigDict(frozen=True)

    @abstractmethod
    def evaluate(self, t: TimeLike) -> TimeLike:
        """Profile value at t (scalar in, float out)."""

    @abstractmethod
    def derivative(self, t: TimeLike) -> TimeLike:
        """First time derivative at t."""

    def polynomial_coefficients(self) -> Optional[List[float]]:
        """Ascending coefficients if the profile is a polynomial in t, else None."""
        return None


class ConstantProfile(_Profile):
    """f(t) = value."""

    kind: Literal["constant"] = "constant"
    value: float

    def evaluate(self, t: TimeLike) -> TimeLike:
        return _shaped(np.full(np.shape(t), self.value, dtype=float), t)

    def derivative(self, t: TimeLike) -> TimeLike:
        return _shaped(np.zeros(np.shape(t), dtype=float), t)

    def polynomial_coefficients(self) -> Optional[List[float]]:
        return [self.value]


class LinearProfile(_Profile):
    """f(t) = slope * t + intercept."""

    kind: Literal["linear"] = "linear"
    slope: float
    intercept: float = 0.0

    def evaluate(self, t: TimeLike) -> TimeLike:
        return _shaped(self.slope * np.asarray(t, dtype=float) + self.intercept, t)

    def derivative(self, t: TimeLike) -> TimeLike:
        return _shaped(np.full(np.shape(t), self.slope, dtype=float), t)

    def polynomial_coefficients(self) -> Optional[List[float]]:
        return [self.intercept, self.slope]


class PolynomialProfile(_Profile):
    """f(t) = sum_k coefficients[k] * t^k (ascending order, Horner evaluation)."""

    kind: Literal["polynomial"] = "polynomial"
    coefficients: List[float] = Field(..., min_length=1)

    def evaluate(self, t: TimeLike) -> TimeLike:
        return _shaped(_horner(self.coefficients, t), t)

    def derivative(self, t: TimeLike) -> TimeLike:
        slopes = [k * c for k, c in enumerate(self.coefficients)][1:] or [0.0]
        return _shaped(_horner(slopes, t), t)

    def polynomial_coefficients(self) -> Optional[List[float]]:
        return list(self.coefficients)


class TabulatedProfile(_Profile):
    """Natural cubic spline through (times, values); no extrapolation."""

    kind: Literal["tabulated"] = "tabulated"
    times: List[float] = Field(..., min_length=2)
    values: List[float] = Field(..., min_length=2)
    interpolation: Literal["cubic"] = "cubic"

    _spline: Any = PrivateAttr(default=None)

    @model_validator(mode="after")
    def _check_table(self) -> "TabulatedProfile":
        if len(self.times) != len(self.values):
            raise ValueError("times and values must have the same length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("tabulated times must be strictly increasing")
        return self

    def model_post_init(self, __context: Any) -> None:
        self._spline = CubicSpline(self.times, self.values, bc_type="natural")

    def _check_range(self, t: TimeLike) -> None:
        t_arr = np.asarray(t, dtype=float)
        lo, hi = float(np.min(t_arr)), float(np.max(t_arr))
        if lo < self.times[0]:
            raise OutOfRange(lo, self.times[0], self.times[-1])
        if hi > self.times[-1]:
            raise OutOfRange(hi, self.times[0], self.times[-1])

    def evaluate(self, t: TimeLike) -> TimeLike:
        self._check_range(t)
        return _shaped(np.asarray(self._spline(t), dtype=float), t)

    def derivative(self, t: TimeLike) -> TimeLike:
        self._check_range(t)
        return _shaped(np.asarray(self._spline(t, 1), dtype=float), t)


TimeProfile = Annotated[
    Union[ConstantProfile, LinearProfile, PolynomialProfile, TabulatedProfile],
    Field(discriminator="kind"),
]


def eval_profile(profile: _Profile, t: TimeLike) -> TimeLike:
    """
    Evaluate a time profile.

    Args:
        profile: Any TimeProfile
        t: Time or array of times

    Returns:
        Profile value(s)

    Raises:
        OutOfRange: Tabulated profile evaluated outside its table
    """
    return profile.evaluate(t)


def eval_profile_derivative(profile: _Profile, t: TimeLike) -> TimeLike:
    """Time derivative of a profile (analytic, or spline derivative for tables)."""
    return profile.derivative(t)


class ParameterSet(BaseModel):
    """Mass, squared frequency and drive profiles plus hbar."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    mass: TimeProfile
    omega_sq: TimeProfile
    lam: TimeProfile = Field(..., alias="lambda")
    hbar: float = Field(1.0, gt=0.0)
    drive: Literal["imaginary", "real", "mixed"] = "imaginary"
    window: Optional[Tuple[float, float]] = None

    @field_validator("window")
    @classmethod
    def window_must_be_ordered(cls, v: Optional[Tuple[float, float]]) -> Optional[Tuple[float, float]]:
        if v is not None and not v[1] > v[0]:
            raise ValueError(f"window end must exceed start: {v}")
        return v

    @model_validator(mode="after")
    def _validate_window(self) -> "ParameterSet":
        if self.window is not None:
            self.check_window(*self.window)
        return self

    @property
    def coupling(self) -> complex:
        """Complex coefficient c of the c·λ(t)·x term."""
        return COUPLINGS[self.drive]

    def check_window(self, t_a: float, t_b: float, n_samples: Optional[int] = None) -> None:
        """
        Require m(t) > 0 and ω²(t) > 0 on [t_a, t_b].

        Raises:
            ParameterError: If either profile is non-positive on the sampling mesh
        """
        n = n_samples or get_config().window_samples
        ts = np.linspace(t_a, t_b, max(n, 1000))
        for name, profile in (("mass", self.mass), ("omega_sq", self.omega_sq)):
            values = np.asarray(profile.evaluate(ts))
            if np.any(values <= 0.0):
                worst = ts[int(np.argmin(values))]
                raise ParameterError(f"{name} must be positive on [{t_a}, {t_b}]; fails at t={worst:.6g}")

    def is_constant_oscillator(self) -> bool:
        """True when m and ω² do not depend on time."""
        return all(
            (c := p.polynomial_coefficients()) is not None and all(x == 0.0 for x in c[1:])
            for p in (self.mass, self.omega_sq)
        )

    def linear_drive_slope(self) -> Optional[float]:
        """Slope a if λ(t) = a·t exactly, else None."""
        coefficients = self.lam.polynomial_coefficients()
        if coefficients is None:
            return None
        padded = list(coefficients) + [0.0, 0.0]
        if padded[0] != 0.0 or any(c != 0.0 for c in padded[2:]):
            return None
        return float(padded[1])

    def to_json_dict(self) -> dict:
        """JSON-ready dict using the external field names."""
        return self.model_dump(by_alias=True, mode="json", exclude_none=True)


class PTVerdict(str, Enum):
    """Outcome of the PT classification."""

    HERMITIAN = "Hermitian"
    PT_SYMMETRIC = "PTSymmetric"
    PT_VIOLATING = "PTViolating"


@dataclass(frozen=True)
class PTClass:
    """PT classification with the asymmetry that decided it."""

    verdict: PTVerdict
    evidence: float
    offender: str = "lambda"


def _asymmetry(profile: _Profile, ts: np.ndarray) -> Tuple[float, float]:
    """(max |f(t) - f(-t)|, 1 + max |f|) over the samples."""
    forward = np.asarray(profile.evaluate(ts))
    backward = np.asarray(profile.evaluate(-ts))
    scale = 1.0 + float(max(np.max(np.abs(forward)), np.max(np.abs(backward))))
    return float(np.max(np.abs(forward - backward))), scale


def pt_classify(params: ParameterSet, window: float, n_samples: Optional[int] = None) -> PTClass:
    """
    Classify the PT symmetry of a parameter profile on [-T, T].

    PT symmetry requires λ(t) even in t given m(t) and ω²(t) even. Sampling
    uses t_i in (0, T]; a profile counts as even when its largest asymmetry is
    below the relative evenness tolerance.

    Args:
        params: Parameter set to classify
        window: Half-width T of the symmetric test window
        n_samples: Number of positive sample times (default from config)

    Returns:
        PTClass verdict with evidence
    """
    config = get_config()
    n = config.pt_samples if n_samples is None else n_samples
    if window <= 0.0 or n < 2:
        raise ParameterError(f"need T > 0 and n_samples >= 2, got T={window}, n={n}")

    ts = np.linspace(window / n, window, n)
    tol = config.evenness_tolerance

    worst_name, worst_ratio, worst_asym = "", 0.0, 0.0
    for name, profile in (("mass", params.mass), ("omega_sq", params.omega_sq)):
        asym, scale = _asymmetry(profile, ts)
        if asym >= tol * scale and asym / scale > worst_ratio:
            worst_name, worst_ratio, worst_asym = name, asym / scale, asym
    if worst_name:
        logger.debug("PT check: %s not even (asymmetry %.3e)", worst_name, worst_asym)
        return PTClass(PTVerdict.PT_VIOLATING, worst_asym, worst_name)

    lam_abs = max(
        float(np.max(np.abs(np.asarray(params.lam.evaluate(ts))))),
        float(np.max(np.abs(np.asarray(params.lam.evaluate(-ts))))),
    )
    if lam_abs <= config.hermitian_tolerance or params.drive == "real":
        return PTClass(PTVerdict.HERMITIAN, lam_abs)

    asym, scale = _asymmetry(params.lam, ts)
    if asym < tol * scale:
        return PTClass(PTVerdict.PT_SYMMETRIC, asym)
    return PTClass(PTVerdict.PT_VIOLATING, asym)
