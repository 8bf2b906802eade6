"""Configuration management using Pydantic Settings."""

from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

PROJECT_ROOT = Path(__file__).resolve().parents[3]


class Settings(BaseSettings):
    """Numerical tolerances, solver limits and I/O locations."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="PROLATE_",
        case_sensitive=False
    )

    # Paths
    reference_dir: Path = Field(default_factory=lambda: PROJECT_ROOT / "reference_tables")

    # Logging and output
    log_level: str = Field(default="INFO")
    digits: int = Field(default=17, ge=1, le=17)

    # Special functions
    elliptic_k_max: float = Field(default=1.0 - 1e-12)
    j_rel_tol: float = Field(default=1e-13)
    phi_tol: float = Field(default=1e-13)
    phi_newton_steps: int = Field(default=50)

    # Galerkin oracle
    galerkin_tail_tol: float = Field(default=1e-15)
    galerkin_max_doublings: int = Field(default=4)

    # Dense eigensolver: Jacobi up to this order, LAPACK above
    jacobi_max_order: int = Field(default=160)
    nystrom_max_order: int = Field(default=2500)

    # Eigenvalue tiers
    nystrom_floor: float = Field(default=1e-12)
    ratio_floor: float = Field(default=1e-13)
    integral_log_tol: float = Field(default=1e-8)
    integral_max_panels: int = Field(default=256)
    tier_nystrom_min: float = Field(default=1e-8)
    tier_ratio_min: float = Field(default=1e-24)

    # Approximation defaults
    kappa_default: float = Field(default=12.0, ge=4.0)

    # Concurrency
    max_workers: int = Field(default=4, ge=1)


# Global settings instance
settings = Settings()
