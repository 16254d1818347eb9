import logging
from functools import lru_cache

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    log_level: str = Field(alias="LOG_LEVEL", default="INFO")
    log_dir: str = Field(alias="LOG_DIR", default="logs")

    # Default worker count for corpus synthesis and feature extraction
    workers: int = Field(alias="WORKERS", default=1, ge=1)

    # Default artifact locations when the CLI flags are omitted
    model_dir: str = Field(alias="MODEL_DIR", default="models")
    report_dir: str = Field(alias="REPORT_DIR", default="reports")
    config_path: str = Field(alias="PIPELINE_CONFIG", default="config/pipeline.yaml")

    model_config = {
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "extra": "ignore",
        "populate_by_name": True,
    }

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate the level is a standard logging level name"""
        level = v.strip().upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"unknown log level: {v}")
        return level


@lru_cache()
def get_settings() -> Settings:
    """Return the settings instance."""
    return Settings()
