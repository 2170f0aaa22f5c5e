from tabulog.solvers.cp import CpStore, label, optimize
from tabulog.solvers.dispatch import Outputs, select_backend, snapshot_solutions
from tabulog.solvers.domain import Domain
from tabulog.solvers.mip import check_exhaustive, emit_lp, linearize, mip_solutions
from tabulog.solvers.model import ConstraintModel, check_solution, solutions
from tabulog.solvers.sat import sat_solutions

__all__ = [
    "ConstraintModel",
    "CpStore",
    "Domain",
    "Outputs",
    "check_exhaustive",
    "check_solution",
    "emit_lp",
    "label",
    "linearize",
    "mip_solutions",
    "optimize",
    "sat_solutions",
    "select_backend",
    "snapshot_solutions",
    "solutions",
]
