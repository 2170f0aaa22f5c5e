"""Application configuration via pydantic-settings."""

from functools import lru_cache
from typing import Literal

from pydantic import Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

Backend = Literal["cp", "sat", "mip"]


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="TABULOG_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging
    log_level: str = "WARNING"
    log_json: bool = False

    # Engine
    recursion_limit: int = 20_000

    # Constraint solving
    default_backend: Backend = "cp"
    eager_propagation: bool = True
    default_int_bound: int = Field(
        default=10**6, description="Bound for constrained variables never declared with ::"
    )
    cp_support_limit: int = 4096

    # SAT
    sat_learning: bool = True
    sat_seed: int = 0

    # MIP
    mip_box_limit: int = 100_000

    # Planner
    plan_default_limit: int = 10**9
    plan_step: int = 1
    plan_allow_coarse_step: bool = False

    @model_validator(mode="after")
    def _check_plan_step(self) -> "Settings":
        if self.plan_step < 1:
            raise ValueError("plan_step must be a positive integer")
        if self.plan_step > 1 and not self.plan_allow_coarse_step:
            raise ValueError(
                "plan_step > 1 can overshoot the optimal plan cost; "
                "set plan_allow_coarse_step for unit-cost domains"
            )
        return self


@lru_cache
def get_settings() -> Settings:
    return Settings()
