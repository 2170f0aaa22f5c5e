"""SAT backend: log encoding, a bundled DPLL solver and model enumeration."""

from __future__ import annotations

import logging
from collections.abc import Iterator
from pathlib import Path

from tabulog.config import Settings, get_settings
from tabulog.solvers.model import ConstraintModel, Rel, objective_value
from tabulog.solvers.sat.cnf import Cnf, parse_dimacs
from tabulog.solvers.sat.dpll import Solver, solve_cnf
from tabulog.solvers.sat.encoder import BitVec, SatEncoder, bit_count, decode

logger = logging.getLogger(__name__)

__all__ = [
    "BitVec",
    "Cnf",
    "SatEncoder",
    "Solver",
    "bit_count",
    "decode",
    "parse_dimacs",
    "sat_solutions",
    "solve_cnf",
]


def _sync(solver: Solver, cnf: Cnf, start: int) -> int:
    for clause in cnf.clauses[start:]:
        solver.add_clause(clause)
    return len(cnf.clauses)


def sat_solutions(
    model: ConstraintModel,
    project: list[int] | None = None,
    settings: Settings | None = None,
    emit_dimacs: str | Path | None = None,
    stats: dict[str, int] | None = None,
) -> Iterator[dict[int, int]]:
    """Solutions of ``model``; each distinct projection onto ``project`` is yielded once.

    With an objective, only one optimal solution is yielded, found by
    re-solving with a strictly better bound until the formula is unsatisfiable.
    """
    settings = settings or get_settings()
    project = model.variables() if project is None else project
    enc = SatEncoder(model)
    cnf = enc.encode()
    if emit_dimacs is not None:
        cnf.write_dimacs(emit_dimacs)
        Path(f"{emit_dimacs}.map").write_text(enc.variable_map(), encoding="utf-8")
        logger.info("wrote DIMACS to %s", emit_dimacs)
    solver = Solver(cnf.num_vars, learning=settings.sat_learning, seed=settings.sat_seed)
    solver.prefer(enc.decision_literals())
    synced = _sync(solver, cnf, 0)

    try:
        if model.objective is not None:
            best: dict[int, int] | None = None
            while solver.solve():
                best = enc.decode(solver.model())
                value = objective_value(model, best)
                op = "#<" if model.objective.sense == "min" else "#>"
                bound = enc.formula(Rel(op, model.objective.expr, value))  # type: ignore[arg-type]
                enc.cnf.add([bound])
                synced = _sync(solver, cnf, synced)
                logger.debug("sat objective improved to %s", value)
            if best is not None:
                yield {v: best[v] for v in project}
            return

        while solver.solve():
            assignment = enc.decode(solver.model(), project)
            yield assignment
            if not solver.add_clause(enc.blocking_clause(assignment)):
                break
    finally:
        if stats is not None:
            stats.update(solver.stats())
