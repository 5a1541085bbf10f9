"""Process configuration using pydantic-settings."""

from functools import lru_cache
from pathlib import Path
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process settings loaded from environment variables.

    Experiment hyperparameters do not live here; they come from the experiment
    config file (see ``genifer.schemas.experiment``).
    """

    model_config = SettingsConfigDict(
        env_prefix="GENIFER_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
    )

    # Application
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"

    # Compute
    device: Literal["cpu", "cuda", "auto"] = "cpu"
    deterministic: bool = Field(default=True, description="Force deterministic torch kernels")
    num_threads: int = Field(default=0, description="torch intra-op threads (0 = torch default)")

    # Paths
    output_root: Path = Field(default=Path("runs"))
    data_root: Path = Field(default=Path("data"), description="Base for relative dataset.path values")

    @property
    def resolved_device(self) -> str:
        """Return the torch device string, resolving ``auto``."""
        if self.device == "auto":
            import torch

            return "cuda" if torch.cuda.is_available() else "cpu"
        return self.device


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
