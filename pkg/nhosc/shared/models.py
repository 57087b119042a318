"""Data models for nhosc scenarios."""

from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from nhosc.core.parameters import ParameterSet


class TaskName(str, Enum):
    """Scenario tasks, executed in the order listed."""

    SOLVE_AUX = "SolveAux"
    EVOLVE = "Evolve"
    COMPARE = "Compare"
    ENERGY = "Energy"
    REALITY_SCAN = "RealityScan"
    PT_CHECK = "PTCheck"
    KERNEL = "Kernel"


class AuxInit(BaseModel):
    """Initial data for the auxiliary system; None selects the particular shift."""
    s0: float = Field(default=1.0, gt=0.0, description="Initial scale factor")
    s_dot0: float = Field(default=0.0, description="Initial scale velocity")
    eta0: Optional[float] = Field(None, description="Initial imaginary shift")
    eta_dot0: Optional[float] = Field(None, description="Initial shift velocity")


class AuxConfig(BaseModel):
    """How the transformation is obtained."""
    init: AuxInit = Field(default_factory=AuxInit)
    omega0: Optional[float] = Field(None, gt=0.0, description="Target frequency (default ω(t0))")
    m0: Optional[float] = Field(None, gt=0.0, description="Target mass (default m(t0))")
    mesh_size: int = Field(default=2001, ge=16, description="Uniform mesh points")
    closed_form: bool = Field(
        default=True,
        description="Use the closed form when m, ω are constant and λ = a·t"
    )


class GridConfig(BaseModel):
    """Uniform spatial grid."""
    center: float = 0.0
    half_width: float = Field(..., gt=0.0)
    n_points: int = Field(..., ge=64)


class EvolveConfig(BaseModel):
    """Time window and stepping of the numerical propagation."""
    t0: float = 0.0
    t1: float
    dt: float = Field(..., gt=0.0)
    snapshot_every: int = Field(default=1000, ge=1, description="Steps between snapshots")
    state: int = Field(default=0, ge=0, le=200, description="Initial eigenmode index")

    @model_validator(mode="after")
    def t1_after_t0(self) -> "EvolveConfig":
        if not self.t1 > self.t0:
            raise ValueError(f"t1 must exceed t0, got t0={self.t0}, t1={self.t1}")
        return self


class CompareConfig(BaseModel):
    """Analytic-vs-numeric acceptance."""
    tolerance: float = Field(default=1e-5, gt=0.0)


class EnergyConfig(BaseModel):
    """Energy expectation against the closed forms."""
    states: List[int] = Field(default_factory=lambda: [0, 1])
    times: List[float] = Field(default_factory=lambda: [0.0, 0.5, 1.0])
    dt_fd: float = Field(default=1e-3, gt=0.0)
    tolerance: float = Field(default=1e-7, gt=0.0)

    @field_validator("states")
    @classmethod
    def states_must_be_low(cls, v: List[int]) -> List[int]:
        if any(n not in (0, 1) for n in v):
            raise ValueError(f"closed forms exist for n in {{0, 1}} only, got {v}")
        return v


class RealityConfig(BaseModel):
    """Reality scan settings."""
    n_max: int = Field(default=5, ge=0, le=200)
    times: List[float] = Field(default_factory=lambda: [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0])
    dt_fd: float = Field(default=1e-3, gt=0.0)
    source: str = Field(default="analytic", pattern="^(analytic|numeric)$")
    expect_real: Optional[bool] = Field(
        None,
        description="Gate the task on the verdict; None records it only"
    )


class KernelConfig(BaseModel):
    """Propagator law checks."""
    dt_delta: float = Field(default=1e-4, gt=0.0)
    damping: float = Field(default=0.5, gt=0.0, description="Abel damping for series/composition")
    mehler_terms: int = Field(default=80, ge=0)
    delta_tolerance: float = Field(default=1e-4, gt=0.0)
    composition_tolerance: float = Field(default=1e-5, gt=0.0)
    mehler_tolerance: float = Field(default=1e-8, gt=0.0)


class Scenario(BaseModel):
    """A complete run description loaded from JSON."""

    model_config = ConfigDict(extra="forbid")

    name: str = "scenario"
    params: ParameterSet
    aux_config: AuxConfig = Field(default_factory=AuxConfig)
    grid_config: Optional[GridConfig] = None
    evolve_config: EvolveConfig
    compare_config: CompareConfig = Field(default_factory=CompareConfig)
    energy_config: EnergyConfig = Field(default_factory=EnergyConfig)
    reality_config: RealityConfig = Field(default_factory=RealityConfig)
    kernel_config: KernelConfig = Field(default_factory=KernelConfig)
    tasks: List[TaskName] = Field(..., min_length=1)

    @model_validator(mode="after")
    def configs_for_tasks(self) -> "Scenario":
        needs_grid = {TaskName.EVOLVE, TaskName.COMPARE, TaskName.KERNEL}
        if needs_grid.intersection(self.tasks) and self.grid_config is None:
            raise ValueError("grid_config is required for Evolve, Compare and Kernel tasks")
        if TaskName.COMPARE in self.tasks:
            if TaskName.EVOLVE not in self.tasks or (
                self.tasks.index(TaskName.EVOLVE) > self.tasks.index(TaskName.COMPARE)
            ):
                raise ValueError("Compare needs an earlier Evolve task")
        self.params.check_window(self.evolve_config.t0, self.evolve_config.t1)
        return self
