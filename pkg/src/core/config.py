import os
from functools import lru_cache
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    threads: int = Field(1, ge=1, description="Worker cap for Monte Carlo replicates")
    calibration_reps: int = Field(2000, ge=200, description="Default calibration replicates")
    risk_reps: int = Field(1000, ge=1, description="Default risk/power replicates")
    cover_budget: int = Field(10_000, ge=1, description="Max supports enumerated by a sparse cover")
    cover_fallback: bool = Field(True, description="Sample supports when the budget is exceeded")
    rsm_budget: int = Field(1_000_000, ge=1, description="Max C(p,s)*|cover| in exact-small mode")
    rsm_step_factor: float = Field(16.0, gt=0, description="kappa in K = ceil(kappa / upsilon^2)")
    log_level: str = Field("INFO", description="Console log level")
    log_file: Optional[str] = Field(None, description="Rotating log file, disabled when empty")
    host: str = Field("localhost")
    port: int = Field(8000)

    model_config = SettingsConfigDict(
        env_prefix="HEAVYTAIL_CPT_",
        env_file=os.path.join(
            os.path.dirname(os.path.dirname(os.path.dirname(__file__))), ".env"
        ),
        extra="ignore",
    )


@lru_cache
def get_settings() -> Settings:
    return Settings()
