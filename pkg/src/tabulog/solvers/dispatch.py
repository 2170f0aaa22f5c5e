"""Backend selection for model snapshots.

The CP backend works on the live store owned by the engine; the SAT and MIP
backends take a :class:`ConstraintModel` snapshot and hand back plain
integer assignments.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field

from tabulog.config import Backend, Settings, get_settings
from tabulog.errors import UnsupportedConstraint
from tabulog.solvers.mip import mip_solutions
from tabulog.solvers.model import ConstraintModel
from tabulog.solvers.sat import sat_solutions

logger = logging.getLogger(__name__)

BACKENDS: tuple[Backend, ...] = ("cp", "sat", "mip")


@dataclass
class Outputs:
    """Where the snapshot backends write their model files, and their counters."""

    emit_dimacs: str | None = None
    emit_lp: str | None = None
    stats: dict[str, int] = field(default_factory=dict)


def select_backend(*candidates: str | None, settings: Settings | None = None) -> Backend:
    """The first non-empty candidate, else the configured default."""
    for c in candidates:
        if c is None:
            continue
        if c not in BACKENDS:
            raise UnsupportedConstraint(c, "any constraint (unknown backend)")
        return c  # type: ignore[return-value]
    return (settings or get_settings()).default_backend


def backend_from_imports(imports: Iterable[str]) -> Backend | None:
    found: Backend | None = None
    for name in imports:
        if name in BACKENDS:
            found = name  # type: ignore[assignment]
    return found


def snapshot_solutions(
    backend: Backend,
    model: ConstraintModel,
    project: list[int],
    settings: Settings | None = None,
    outputs: Outputs | None = None,
) -> Iterator[dict[int, int]]:
    settings = settings or get_settings()
    outputs = outputs or Outputs()
    logger.info(
        "dispatching %d variables and %d constraints to %s",
        len(model.domains),
        len(model.constraints),
        backend,
    )
    if backend == "sat":
        return sat_solutions(model, project, settings, outputs.emit_dimacs, outputs.stats)
    if backend == "mip":
        return mip_solutions(model, project, settings, outputs.emit_lp)
    raise ValueError(f"{backend} is not a snapshot backend")
