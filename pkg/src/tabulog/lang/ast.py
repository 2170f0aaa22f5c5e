"""Surface syntax tree.

Nodes compare structurally; source positions are carried with
``compare=False`` so a reparse of printed output compares equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Union

RuleKind = Literal["nonbacktrackable", "backtrackable", "function"]
Mode = Literal["+", "-", "min", "max", "nt"]


@dataclass(frozen=True)
class Variable:
    name: str

    @property
    def anonymous(self) -> bool:
        return self.name == "_"


@dataclass(frozen=True)
class Symbol:
    name: str


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class StrLit:
    value: str


@dataclass(frozen=True)
class ListExpr:
    items: tuple[Expr, ...]
    tail: Expr | None = None


@dataclass(frozen=True)
class ArrayExpr:
    items: tuple[Expr, ...]


@dataclass(frozen=True)
class Call:
    """``name(args)``. Operators and control constructs are calls too."""

    name: str
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class Quote:
    """``$Expr``: compound terms inside are data, not function calls."""

    expr: Expr


@dataclass(frozen=True)
class Index:
    base: Expr
    indices: tuple[Expr, ...]


@dataclass(frozen=True)
class Member:
    """``Base.name`` or ``Base.name(args)`` before :func:`rewrite_oop`."""

    base: Expr
    name: str
    args: tuple[Expr, ...] | None


@dataclass(frozen=True)
class Attr:
    base: Expr
    name: str


@dataclass(frozen=True)
class Range:
    lo: Expr
    hi: Expr
    step: Expr | None = None


@dataclass(frozen=True)
class AsPattern:
    var: Variable
    pattern: Expr


@dataclass(frozen=True)
class Iterator:
    pattern: Expr
    domain: Expr


@dataclass(frozen=True)
class Comprehension:
    template: Expr
    clauses: tuple[Expr, ...]


@dataclass(frozen=True)
class Foreach:
    clauses: tuple[Expr, ...]
    body: Expr


@dataclass(frozen=True)
class Assign:
    target: Variable
    value: Expr


@dataclass(frozen=True)
class IfThenElse:
    branches: tuple[tuple[Expr, Expr], ...]
    orelse: Expr | None = None


Expr = Union[
    Variable,
    Symbol,
    IntLit,
    StrLit,
    ListExpr,
    ArrayExpr,
    Call,
    Quote,
    Index,
    Member,
    Attr,
    Range,
    AsPattern,
    Iterator,
    Comprehension,
    Foreach,
    Assign,
    IfThenElse,
]

TRUE = Symbol("true")


@dataclass(frozen=True)
class ModeTuple:
    modes: tuple[Mode, ...]

    @property
    def optimized(self) -> int | None:
        for i, m in enumerate(self.modes):
            if m in ("min", "max"):
                return i
        return None

    @property
    def has_nt(self) -> bool:
        return bool(self.modes) and self.modes[-1] == "nt"


@dataclass
class SourceRule:
    head: Expr
    cond: Expr = TRUE
    body: Expr = TRUE
    kind: RuleKind = "nonbacktrackable"
    return_expr: Expr | None = None
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class PredicateDef:
    name: str
    arity: int
    rules: list[SourceRule] = field(default_factory=list)
    tabled: bool = False
    table_decl: ModeTuple | None = None
    is_function: bool = False

    @property
    def key(self) -> tuple[str, int]:
        return (self.name, self.arity)


@dataclass
class Program:
    predicates: dict[tuple[str, int], PredicateDef] = field(default_factory=dict)
    imports: list[str] = field(default_factory=list)
    # Module qualifiers seen in ``mod.name`` references.
    qualifiers: list[str] = field(default_factory=list, compare=False)
    filename: str = field(default="<string>", compare=False)

    def add_rule(self, name: str, arity: int, rule: SourceRule, is_function: bool) -> PredicateDef:
        pred = self.predicates.get((name, arity))
        if pred is None:
            pred = self.predicates[(name, arity)] = PredicateDef(name, arity, is_function=is_function)
        pred.rules.append(rule)
        return pred
