"""Per-invocation options of ``tabulog run``."""

from __future__ import annotations

from pydantic import BaseModel, Field, model_validator

from tabulog.config import Backend


class CliConfig(BaseModel):
    source: str
    goal: str = "main"
    all_solutions: bool = False
    backend: Backend | None = None
    emit_dimacs: str | None = None
    emit_lp: str | None = None
    table_stats: bool = False
    plan_stats: bool = False
    stats: bool = False
    seed: int | None = None
    limit: int | None = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _check_emit_backend(self) -> CliConfig:
        if self.emit_lp is not None and self.backend != "mip":
            raise ValueError("--emit-lp requires --backend mip")
        if self.emit_dimacs is not None and self.backend != "sat":
            raise ValueError("--emit-dimacs requires --backend sat")
        return self
