"""
Application settings module.

Runtime settings come from environment variables (and ``.env``) via
pydantic-settings. Experiment parameters live in scenario files, not here.
"""

from functools import lru_cache
from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class SimulationSettings(BaseSettings):
    """Experiment runner defaults."""

    model_config = SettingsConfigDict(
        env_file=".env", env_prefix="MECP_", extra="ignore"
    )

    output_dir: Path = Path("results")
    trace_enabled: bool = False
    max_workers: int = Field(1, ge=1)  # parallel seeds; 1 runs them in-process
    default_scenario: Path = Path("scenarios/default.yaml")


class Settings(BaseSettings):
    """Main application settings."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # "development" turns on debug logging unless LOG_LEVEL says otherwise.
    environment: str = "production"

    log_level: str = "INFO"

    @property
    def is_development(self) -> bool:
        """True when running in the development environment."""
        return self.environment.lower() in ("development", "dev", "local")

    @property
    def effective_log_level(self) -> str:
        if self.is_development and self.log_level.upper() == "INFO":
            return "DEBUG"
        return self.log_level.upper()

    simulation: SimulationSettings = Field(default_factory=SimulationSettings)


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
