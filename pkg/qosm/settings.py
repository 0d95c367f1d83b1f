# qosm/settings.py
from functools import lru_cache
from typing import List

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Engine-wide knobs. Values come from QOSM_* environment variables or a
    local .env file; CLI flags override them per invocation.
    """
    model_config = SettingsConfigDict(env_prefix="QOSM_", env_file=".env", extra="ignore")

    interval_seconds: int = Field(120, gt=0)
    bins: int = Field(10, ge=1)
    epsilon: float = Field(1e-9, ge=0.0)
    selection_budget: int = Field(200, ge=1)
    warm_start: int = Field(8, ge=4)
    eval_window: int = Field(350, ge=1)
    train_fraction: float = Field(0.7, gt=0.0, lt=1.0)
    alpha_init: float = Field(0.1, ge=0.0)
    beta_init: float = Field(0.1, ge=0.0)
    update_window: int = Field(1, ge=1)
    max_workers: int = Field(4, ge=1)
    fixed_primitives: List[str] = ["cpu", "memory"]
    log_level: str = "INFO"

    @field_validator("log_level")
    @classmethod
    def _upper_level(cls, value: str) -> str:
        return value.upper()


@lru_cache
def get_settings() -> Settings:
    return Settings()
