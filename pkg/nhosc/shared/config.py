"""Configuration management for nhosc."""

from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class NhoscConfig(BaseSettings):
    """Numerical defaults loaded from env vars and .nhosc/.env"""

    # Auxiliary ODE
    ode_rtol: float = 1e-10
    ode_atol: float = 1e-12
    aux_mesh_size: int = 2001
    singular_scale_ratio: float = 1e-8
    residual_c1_limit: float = 1e-8
    residual_c2_limit: float = 1e-6
    residual_c3_limit: float = 1e-6

    # Parameters / PT classification
    window_samples: int = 1001
    pt_samples: int = 1000
    evenness_tolerance: float = 1e-10
    hermitian_tolerance: float = 1e-12

    # Analytic
    hermite_max_index: int = 200
    caustic_guard: float = 1e-6
    kernel_tail_ratio: float = 1e-12
    kernel_chunk_elements: int = 2_000_000

    # Grids and propagation
    min_grid_points: int = 64
    boundary_ratio: float = 1e-10
    steps_per_period: float = 1000.0

    # Observables
    fd_step: float = 1e-3
    reality_tolerance: float = 1e-7

    # Logging
    log_level: str = "WARNING"

    model_config = SettingsConfigDict(
        env_prefix="NHOSC_",
        env_file=".nhosc/.env",
        env_file_encoding="utf-8",
        extra="ignore"
    )


@lru_cache(maxsize=1)
def get_config() -> NhoscConfig:
    """Get the process-wide configuration (read once)."""
    return NhoscConfig()
