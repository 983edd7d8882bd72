"""
Configuration management for the AMP power-allocation toolkit.
Uses Pydantic Settings for validation and environment variable loading.
"""
from functools import lru_cache
from pathlib import Path
from typing import Optional

from pydantic import Field, computed_field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Runtime settings with validation.
    All settings can be overridden via environment variables or a `.env` file.
    """
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    # ========================================================================
    # Application Settings
    # ========================================================================
    environment: str = Field(
        default="production",
        description="Environment (development, test, production)"
    )

    log_level: str = Field(
        default="INFO",
        description="Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)"
    )

    log_dir: str = Field(
        default="logs",
        description="Directory for log files"
    )

    log_file: bool = Field(
        default=False,
        description="Also write rotating log files under log_dir"
    )

    json_logs: bool = Field(
        default=False,
        description="Use JSON format for file logs"
    )

    show_progress: bool = Field(
        default=True,
        description="Show tqdm progress bars for trial batches"
    )

    # ========================================================================
    # Parallelism
    # ========================================================================
    workers: Optional[int] = Field(
        default=None,
        ge=1,
        le=512,
        description="Worker count for parallel trials (unset: auto-detect)"
    )

    # ========================================================================
    # AMP.P Defaults
    # ========================================================================
    amp_max_iter: int = Field(
        default=300,
        ge=1,
        description="Iteration cap of a single AMP.P run"
    )

    amp_x_tol: float = Field(
        default=1e-6,
        gt=0,
        description="Relative change of the iterate that stops AMP.P"
    )

    amp_divergence_factor: float = Field(
        default=10.0,
        gt=1,
        description="Growth of the effective-noise estimate flagged as divergence"
    )

    amp_divergence_window: int = Field(
        default=10,
        ge=1,
        description="Number of iterations the divergence growth is measured over"
    )

    # ========================================================================
    # Experiment Defaults
    # ========================================================================
    default_trials: int = Field(
        default=50,
        ge=1,
        description="Monte Carlo trials per configuration"
    )

    default_seed: int = Field(
        default=0,
        ge=0,
        lt=2**64,
        description="Base seed of the per-trial generators"
    )

    default_a_param: float = Field(
        default=0.02,
        gt=0,
        lt=1,
        description="Gap a of the a-least-favorable prior"
    )

    contour_resolution: int = Field(
        default=50,
        ge=2,
        le=2000,
        description="Grid points per axis of a contour grid"
    )

    output_dir: str = Field(
        default="results",
        description="Default directory for result files"
    )

    # ========================================================================
    # Validators
    # ========================================================================

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level."""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        v_upper = v.upper()
        if v_upper not in valid_levels:
            raise ValueError(f"Invalid log level. Must be one of: {', '.join(valid_levels)}")
        return v_upper

    @field_validator("environment")
    @classmethod
    def validate_environment(cls, v: str) -> str:
        """Validate environment."""
        valid_envs = ["development", "dev", "production", "prod", "test"]
        v_lower = v.lower()
        if v_lower not in valid_envs:
            raise ValueError(f"Invalid environment. Must be one of: {', '.join(valid_envs)}")
        return v_lower

    # ========================================================================
    # Computed Properties
    # ========================================================================

    @computed_field
    def is_development(self) -> bool:
        """Check if running in development mode."""
        return self.environment in ["dev", "development"]

    @computed_field
    def n_jobs(self) -> int:
        """joblib worker count; -1 lets joblib use every available core."""
        return self.workers if self.workers is not None else -1

    @property
    def log_path(self) -> Path:
        """Get log directory as Path object."""
        path = Path(self.log_dir)
        path.mkdir(parents=True, exist_ok=True)
        return path


@lru_cache()
def get_settings() -> Settings:
    """
    Get settings singleton instance.
    Uses lru_cache to ensure settings are loaded only once.

    Returns:
        Settings instance
    """
    return Settings()


# Global settings instance
settings = get_settings()
