"""Backend-neutral constraint models.

A :class:`ConstraintModel` is what every backend consumes: integer decision
variables with finite domains, a list of constraints and an optional
objective. Expressions are integers, variable references and operator
nodes; formulas are relations, Boolean connectives over formulas, or 0/1
valued expressions.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from typing import NamedTuple, Union

from tabulog.errors import CheckerRefused
from tabulog.solvers.domain import Domain


class Ref(NamedTuple):
    id: int

    def __repr__(self) -> str:
        return f"x{self.id}"


@dataclass(frozen=True)
class Op:
    """``+ - * div mod abs min max neg`` over expressions."""

    name: str
    args: tuple[Expr, ...]


Expr = Union[int, Ref, Op]

RELATIONS = ("#=", "#!=", "#<", "#=<", "#>", "#>=")
CONNECTIVES = ("#/\\", "#\\/", "#^", "#=>", "#<=>", "#~")
NEGATED = {"#=": "#!=", "#!=": "#=", "#<": "#>=", "#>=": "#<", "#>": "#=<", "#=<": "#>"}


@dataclass(frozen=True)
class Rel:
    op: str
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Conn:
    op: str
    args: tuple[Formula, ...]


Formula = Union[Rel, Conn, int, Ref, Op]


@dataclass(frozen=True)
class AllDifferent:
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class Element:
    """``items[index] = value`` with a 1-based index."""

    index: Expr
    items: tuple[Expr, ...]
    value: Expr


@dataclass(frozen=True)
class Table:
    args: tuple[Expr, ...]
    tuples: tuple[tuple[int, ...], ...]
    negated: bool = False


Constraint = Union[Rel, Conn, AllDifferent, Element, Table, Ref, Op, int]


@dataclass(frozen=True)
class Objective:
    sense: str  # "min" or "max"
    expr: Expr


@dataclass
class ConstraintModel:
    domains: dict[int, Domain] = field(default_factory=dict)
    constraints: list[Constraint] = field(default_factory=list)
    objective: Objective | None = None
    names: dict[int, str] = field(default_factory=dict)

    def new_var(self, domain: Domain, name: str | None = None) -> Ref:
        vid = max(self.domains, default=-1) + 1
        self.domains[vid] = domain
        if name:
            self.names[vid] = name
        return Ref(vid)

    def post(self, c: Constraint) -> None:
        self.constraints.append(c)

    def variables(self) -> list[int]:
        return sorted(self.domains)

    def name_of(self, vid: int) -> str:
        return self.names.get(vid, f"x{vid}")


# ---------------------------------------------------------------------------
# Structure
# ---------------------------------------------------------------------------


def expr_refs(e: object, out: set[int] | None = None) -> set[int]:
    """Variable ids mentioned anywhere in an expression, formula or constraint."""
    out = set() if out is None else out
    if isinstance(e, Ref):
        out.add(e.id)
    elif isinstance(e, Op):
        for a in e.args:
            expr_refs(a, out)
    elif isinstance(e, Rel):
        expr_refs(e.lhs, out)
        expr_refs(e.rhs, out)
    elif isinstance(e, Conn):
        for a in e.args:
            expr_refs(a, out)
    elif isinstance(e, AllDifferent):
        for a in e.args:
            expr_refs(a, out)
    elif isinstance(e, Element):
        expr_refs(e.index, out)
        expr_refs(e.value, out)
        for a in e.items:
            expr_refs(a, out)
    elif isinstance(e, Table):
        for a in e.args:
            expr_refs(a, out)
    return out


def linear_form(e: Expr) -> tuple[dict[int, int], int] | None:
    """``({var id: coefficient}, constant)`` if ``e`` is linear, else ``None``."""
    if isinstance(e, int):
        return {}, e
    if isinstance(e, Ref):
        return {e.id: 1}, 0
    name, args = e.name, e.args
    if name in ("+", "-") and len(args) == 2:
        a = linear_form(args[0])
        b = linear_form(args[1])
        if a is None or b is None:
            return None
        sign = 1 if name == "+" else -1
        coefs = dict(a[0])
        for v, k in b[0].items():
            coefs[v] = coefs.get(v, 0) + sign * k
        return {v: k for v, k in coefs.items() if k}, a[1] + sign * b[1]
    if name == "neg" and len(args) == 1:
        a = linear_form(args[0])
        if a is None:
            return None
        return {v: -k for v, k in a[0].items()}, -a[1]
    if name == "*" and len(args) == 2:
        a = linear_form(args[0])
        b = linear_form(args[1])
        if a is None or b is None:
            return None
        if not a[0]:
            a, b = b, a
        if b[0]:
            return None
        k = b[1]
        return ({v: c * k for v, c in a[0].items() if c * k}, a[1] * k)
    return None


def normalize_relation(
    lhs: tuple[dict[int, int], int], rhs: tuple[dict[int, int], int], op: str
) -> tuple[dict[int, int], int, str]:
    """Rewrite ``lhs op rhs`` as ``sum + c OP 0`` with OP one of ``=``, ``!=``, ``<=``."""
    coefs = dict(lhs[0])
    for v, k in rhs[0].items():
        coefs[v] = coefs.get(v, 0) - k
    coefs = {v: k for v, k in coefs.items() if k}
    c = lhs[1] - rhs[1]
    if op == "#=":
        return coefs, c, "="
    if op == "#!=":
        return coefs, c, "!="
    if op == "#=<":
        return coefs, c, "<="
    if op == "#<":
        return coefs, c + 1, "<="
    neg = {v: -k for v, k in coefs.items()}
    if op == "#>=":
        return neg, -c, "<="
    return neg, -c + 1, "<="


def relation_form(rel: Rel) -> tuple[dict[int, int], int, str] | None:
    lhs = linear_form(rel.lhs)
    rhs = linear_form(rel.rhs)
    if lhs is None or rhs is None:
        return None
    return normalize_relation(lhs, rhs, rel.op)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError
    return a // b


def _mod(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError
    return a % b


OPERATIONS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "div": _div,
    "mod": _mod,
    "min": min,
    "max": max,
    "abs": abs,
    "neg": lambda a: -a,
}

CONNECTIVE_TABLE = {
    "#/\\": lambda a, b: a and b,
    "#\\/": lambda a, b: a or b,
    "#^": lambda a, b: a != b,
    "#=>": lambda a, b: (not a) or b,
    "#<=>": lambda a, b: a == b,
    "#~": lambda a: not a,
}

COMPARE = {
    "#=": lambda a, b: a == b,
    "#!=": lambda a, b: a != b,
    "#<": lambda a, b: a < b,
    "#=<": lambda a, b: a <= b,
    "#>": lambda a, b: a > b,
    "#>=": lambda a, b: a >= b,
}


def evaluate(e: Expr, assignment: Mapping[int, int]) -> int:
    if isinstance(e, int):
        return e
    if isinstance(e, Ref):
        return assignment[e.id]
    return int(OPERATIONS[e.name](*(evaluate(a, assignment) for a in e.args)))


def holds(f: Formula, assignment: Mapping[int, int]) -> bool:
    if isinstance(f, Rel):
        return bool(COMPARE[f.op](evaluate(f.lhs, assignment), evaluate(f.rhs, assignment)))
    if isinstance(f, Conn):
        return bool(CONNECTIVE_TABLE[f.op](*(holds(a, assignment) for a in f.args)))
    v = evaluate(f, assignment)
    if v not in (0, 1):
        return False
    return v == 1


def satisfied(c: Constraint, assignment: Mapping[int, int]) -> bool:
    try:
        if isinstance(c, AllDifferent):
            values = [evaluate(a, assignment) for a in c.args]
            return len(values) == len(set(values))
        if isinstance(c, Element):
            i = evaluate(c.index, assignment)
            if not 1 <= i <= len(c.items):
                return False
            return evaluate(c.items[i - 1], assignment) == evaluate(c.value, assignment)
        if isinstance(c, Table):
            row = tuple(evaluate(a, assignment) for a in c.args)
            return (row in set(c.tuples)) != c.negated
        return holds(c, assignment)
    except ZeroDivisionError:
        return False


def check_solution(model: ConstraintModel, assignment: Mapping[int, int]) -> bool:
    """True iff ``assignment`` gives every variable a domain value and satisfies every constraint."""
    for vid, dom in model.domains.items():
        if vid not in assignment or assignment[vid] not in dom:
            return False
    return all(satisfied(c, assignment) for c in model.constraints)


def box_size(model: ConstraintModel, vids: list[int] | None = None) -> int:
    size = 1
    for vid in model.variables() if vids is None else vids:
        size *= model.domains[vid].size
    return size


def solutions(model: ConstraintModel, limit: int = 100_000) -> Iterator[dict[int, int]]:
    """Every solution by exhaustive enumeration of the domain box."""
    vids = model.variables()
    if box_size(model) > limit:
        raise CheckerRefused(f"box of {box_size(model)} points exceeds {limit}")
    for values in itertools.product(*(list(model.domains[v]) for v in vids)):
        assignment = dict(zip(vids, values))
        if all(satisfied(c, assignment) for c in model.constraints):
            yield assignment


def objective_value(model: ConstraintModel, assignment: Mapping[int, int]) -> int | None:
    if model.objective is None:
        return None
    return evaluate(model.objective.expr, assignment)


def format_expr(e: object) -> str:
    if isinstance(e, (int, Ref)):
        return repr(e)
    if isinstance(e, Op):
        if len(e.args) == 2 and e.name in ("+", "-", "*"):
            return f"({format_expr(e.args[0])}{e.name}{format_expr(e.args[1])})"
        return f"{e.name}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, Rel):
        return f"{format_expr(e.lhs)} {e.op} {format_expr(e.rhs)}"
    if isinstance(e, Conn):
        if len(e.args) == 1:
            return f"{e.op}({format_expr(e.args[0])})"
        return f"({format_expr(e.args[0])} {e.op} {format_expr(e.args[1])})"
    if isinstance(e, AllDifferent):
        return f"all_different([{', '.join(format_expr(a) for a in e.args)}])"
    if isinstance(e, Element):
        return f"element({format_expr(e.index)}, ..., {format_expr(e.value)})"
    if isinstance(e, Table):
        return f"{'table_notin' if e.negated else 'table_in'}(...)"
    return repr(e)
