from tabulog.lang.compiler import Clause, Predicate, compile_program
from tabulog.lang.lowering import lower_loops, lower_query
from tabulog.lang.parser import parse_expr, parse_goal, parse_program, rewrite_oop
from tabulog.lang.printer import format_expr, format_program, format_rule

__all__ = [
    "Clause",
    "Predicate",
    "compile_program",
    "format_expr",
    "format_program",
    "format_rule",
    "lower_loops",
    "lower_query",
    "parse_expr",
    "parse_goal",
    "parse_program",
    "rewrite_oop",
]
