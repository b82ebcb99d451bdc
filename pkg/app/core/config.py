"""
BEC Interferometer Core Configuration

This module manages process-level settings using Pydantic Settings.
Environment variables are loaded from .env file. Per-run physics lives in
run documents (see app.cli.schemas), not here.
"""

from functools import lru_cache
from typing import Literal

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process settings loaded from environment variables"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Environment
    env: Literal["development", "staging", "production"] = "development"
    debug: bool = False
    log_level: str = "INFO"

    # Verification harness
    oracle_cap: int = Field(default=64, ge=2)
    verify_max_n: int = Field(default=8, ge=2)

    # Outputs
    output_root: str = "runs"
    checkpoint_name: str = "checkpoint.npz"

    # Mode solver
    unoccupied_threshold: float = Field(default=1e-8, gt=0.0, lt=1.0)

    @field_validator("log_level")
    @classmethod
    def normalize_log_level(cls, v: str) -> str:
        """Accept lower-case level names from the environment"""
        return v.upper()

    @property
    def is_production(self) -> bool:
        """Check if running in production"""
        return self.env == "production"


@lru_cache()
def get_settings() -> Settings:
    """
    Get cached settings instance.
    Uses lru_cache for singleton pattern.
    """
    return Settings()


# Export singleton instance
settings = get_settings()
