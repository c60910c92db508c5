"""
Global configuration for the DWPI toolkit
"""

from functools import lru_cache
from pathlib import Path

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

_LOG_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
_LOG_FORMATS = {"json", "console"}


class Settings(BaseSettings):
    """Process-level settings with environment variable support (prefix ``DWPI_``)"""

    model_config = SettingsConfigDict(
        env_prefix="DWPI_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Basic configuration
    environment: str = "development"
    log_level: str = "INFO"
    log_format: str = "console"

    # Execution
    default_workers: int = 1

    # Locations
    data_dir: Path = Path(__file__).parent / "envs" / "data"
    artifact_dir: Path = Path("runs")

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Normalise and check the log level name"""
        level = v.upper()
        if level not in _LOG_LEVELS:
            raise ValueError(f"log_level must be one of {sorted(_LOG_LEVELS)}")
        return level

    @field_validator("log_format")
    @classmethod
    def validate_log_format(cls, v: str) -> str:
        fmt = v.lower()
        if fmt not in _LOG_FORMATS:
            raise ValueError(f"log_format must be one of {sorted(_LOG_FORMATS)}")
        return fmt

    @field_validator("default_workers")
    @classmethod
    def validate_workers(cls, v: int) -> int:
        if v < 1:
            raise ValueError("default_workers must be at least 1")
        return v

    @property
    def is_testing(self) -> bool:
        """Check if running in testing environment"""
        return self.environment.lower() == "testing"


@lru_cache()
def get_settings() -> Settings:
    """
    Get cached process settings

    Returns:
        Settings: Configuration instance
    """
    return Settings()
