"""Compile lowered programs into slot-numbered runtime clauses.

Variables of a rule become :class:`Slot` indexes into a per-activation
environment list. Rule heads compile to *patterns* (matched one-way), rule
bodies to flat tuples of goal instructions. Function calls in argument
positions are flattened innermost-first into goals that run before the goal
that uses their value:

- arithmetic becomes an ``EVAL`` of an arithmetic template,
- user functions become calls of their predicate form ``f/(n+1)``,
- everything else becomes an ``FCALL`` resolved when it runs.

Arguments of arithmetic comparisons and of constraints are not flattened:
their arithmetic structure is data for the comparison or the solver.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

from tabulog.errors import ParseError
from tabulog.lang import ast
from tabulog.terms.store import TermStore
from tabulog.terms.types import NIL, Array, Atom, Cons, Struct, make_string

logger = logging.getLogger(__name__)

# Goal instructions. Each goal is a tuple whose first element is the opcode.
CALL = 1  # (CALL, key, args)
UNIFY = 2  # (UNIFY, a, b)
EVAL = 3  # (EVAL, expr, result)
FCALL = 4  # (FCALL, name, args, result)
ITE = 5  # (ITE, cond, then, else)
OR = 6  # (OR, left, right)
CUT = 7  # (CUT, height); only created at run time
FAIL = 8  # (FAIL,)
CALLTERM = 9  # (CALLTERM, goal, extra_args)
FINDALL = 10  # (FINDALL, template, goals, result)
RULES = 11  # (RULES, key, args); runs a tabled predicate's clauses directly

Goal = tuple[Any, ...]

ARITH_FUNCTIONS: set[tuple[str, int]] = {
    ("+", 2), ("-", 2), ("*", 2), ("/", 2), ("//", 2), ("div", 2), ("mod", 2),
    ("rem", 2), ("**", 2), ("/\\", 2), ("\\/", 2), ("min", 2), ("max", 2),
    ("-", 1), ("+", 1), ("abs", 1), ("sign", 1),
}

ARITH_COMPARISONS = {"<", ">", "=<", ">=", "=:=", "=\\="}

CONSTRAINT_RELATIONS = {"#=", "#!=", "#<", "#>", "#=<", "#>="}
BOOLEAN_CONNECTIVES = {"#<=>", "#=>", "#\\/", "#/\\", "#^", "#~"}
CONSTRAINT_GOALS = (
    CONSTRAINT_RELATIONS
    | BOOLEAN_CONNECTIVES
    | {"::", "all_different", "all_distinct", "element", "table_in", "table_notin",
       "circuit", "cumulative", "solve"}
)
# Kept as structure inside constraint arguments.
CONSTRAINT_DATA = {name for name, _ in ARITH_FUNCTIONS} | {"sum"} | CONSTRAINT_RELATIONS | BOOLEAN_CONNECTIVES

# Operators that are data, not functions, in argument positions.
DATA_OPERATORS = {",", ";", "->", "=", "==", "!=", "!==", ":", "=>", "?=>", "::", "<", ">", "=<", ">="}


class Slot:
    __slots__ = ("index", "name")

    def __init__(self, index: int, name: str | None) -> None:
        self.index = index
        self.name = name

    def __repr__(self) -> str:
        return f"Slot({self.index}, {self.name})"


class _Anon:
    """``_``: a fresh variable when built, matches anything as a pattern."""

    _instance: _Anon | None = None

    def __new__(cls) -> _Anon:
        if cls._instance is None:
            cls._instance = object.__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "_"


ANON = _Anon()


class TStruct:
    __slots__ = ("name", "args")

    def __init__(self, name: str, args: tuple[Any, ...]) -> None:
        self.name = name
        self.args = args


class TCons:
    __slots__ = ("head", "tail")

    def __init__(self, head: Any, tail: Any) -> None:
        self.head = head
        self.tail = tail


class TArray:
    __slots__ = ("elems",)

    def __init__(self, elems: tuple[Any, ...]) -> None:
        self.elems = elems


class TAs:
    """As-pattern ``V@Pattern``."""

    __slots__ = ("slot", "pattern")

    def __init__(self, slot: Slot, pattern: Any) -> None:
        self.slot = slot
        self.pattern = pattern


TEMPLATE_TYPES = (Slot, _Anon, TStruct, TCons, TArray, TAs)


def is_constant(t: Any) -> bool:
    return not isinstance(t, TEMPLATE_TYPES)


@dataclass
class Clause:
    head: tuple[Any, ...]
    nslots: int
    cond: tuple[Goal, ...]
    body: tuple[Goal, ...]
    backtrackable: bool
    line: int = 0

    @property
    def has_cond(self) -> bool:
        return bool(self.cond)


@dataclass
class Predicate:
    name: str
    arity: int
    clauses: list[Clause] = field(default_factory=list)
    tabled: bool = False
    modes: tuple[str, ...] | None = None
    is_function: bool = False

    @property
    def key(self) -> tuple[str, int]:
        return (self.name, self.arity)

    @property
    def indicator(self) -> str:
        return f"{self.name}/{self.arity - 1 if self.is_function else self.arity}"


class RuleCompiler:
    """Compiles one rule (or one query) with its own slot numbering."""

    def __init__(self, functions: set[tuple[str, int]], store: TermStore, filename: str = "<string>") -> None:
        self.functions = functions
        self.store = store
        self.filename = filename
        self.slots: dict[str, Slot] = {}
        self.nslots = 0
        self.line = 0

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.filename, self.line, 0)

    def slot(self, name: str) -> Slot:
        s = self.slots.get(name)
        if s is None:
            s = self.slots[name] = Slot(self.nslots, name)
            self.nslots += 1
        return s

    def temp(self) -> Slot:
        s = Slot(self.nslots, None)
        self.nslots += 1
        return s

    def _var(self, v: ast.Variable) -> Any:
        return ANON if v.anonymous else self.slot(v.name)

    # -- template construction ------------------------------------------------

    def struct(self, name: str, args: list[Any]) -> Any:
        if not args:
            return Atom(name)
        if all(is_constant(a) for a in args):
            return self.store.intern(Struct(name, tuple(args)))
        return TStruct(name, tuple(args))

    def cons(self, head: Any, tail: Any) -> Any:
        if is_constant(head) and is_constant(tail):
            return self.store.intern(Cons(head, tail))
        return TCons(head, tail)

    def array(self, elems: list[Any]) -> Any:
        if all(is_constant(e) for e in elems):
            return self.store.intern(Array(tuple(elems)))
        return TArray(tuple(elems))

    def _literal(self, e: ast.Expr) -> Any:
        if isinstance(e, ast.IntLit):
            return e.value
        if isinstance(e, ast.Symbol):
            return Atom(e.name)
        if isinstance(e, ast.StrLit):
            return self.store.intern(make_string(e.value))
        return None

    def _list(self, e: ast.ListExpr, item: Any) -> Any:
        out = NIL if e.tail is None else item(e.tail)
        for x in reversed(e.items):
            out = self.cons(item(x), out)
        return out

    # -- patterns (rule heads) -------------------------------------------------

    def pattern(self, e: ast.Expr) -> Any:
        if isinstance(e, ast.Variable):
            return self._var(e)
        lit = self._literal(e)
        if lit is not None:
            return lit
        if isinstance(e, ast.ListExpr):
            return self._list(e, self.pattern)
        if isinstance(e, ast.ArrayExpr):
            return self.array([self.pattern(x) for x in e.items])
        if isinstance(e, ast.Call):
            return self.struct(e.name, [self.pattern(a) for a in e.args])
        if isinstance(e, ast.Quote):
            return self.pattern(e.expr)
        if isinstance(e, ast.AsPattern):
            return TAs(self.slot(e.var.name), self.pattern(e.pattern))
        if isinstance(e, ast.Range):
            parts = [e.lo, e.hi] if e.step is None else [e.lo, e.step, e.hi]
            return self.struct("..", [self.pattern(p) for p in parts])
        raise self.error(f"invalid pattern {type(e).__name__}")

    # -- argument contexts -----------------------------------------------------

    def value(self, e: ast.Expr, pre: list[Goal]) -> Any:
        """An argument whose function calls are evaluated before the goal runs."""
        if isinstance(e, ast.Variable):
            return self._var(e)
        lit = self._literal(e)
        if lit is not None:
            return lit
        if isinstance(e, ast.ListExpr):
            return self._list(e, lambda x: self.value(x, pre))
        if isinstance(e, ast.ArrayExpr):
            return self.array([self.value(x, pre) for x in e.items])
        if isinstance(e, ast.Quote):
            return self.data(e.expr, pre)
        if isinstance(e, ast.Index):
            return self._fcall("$index", [e.base, *e.indices], pre)
        if isinstance(e, ast.Attr):
            base = self.value(e.base, pre)
            result = self.temp()
            pre.append((FCALL, "get", (base, Atom(e.name)), result))
            return result
        if isinstance(e, ast.Range):
            parts = [e.lo, e.hi] if e.step is None else [e.lo, e.step, e.hi]
            return self._fcall("..", parts, pre)
        if isinstance(e, ast.AsPattern):
            inner = self.value(e.pattern, pre)
            pre.append((UNIFY, self.slot(e.var.name), inner))
            return inner
        if isinstance(e, ast.Call):
            return self._call_value(e, pre)
        raise self.error(f"{type(e).__name__} cannot be used as a value")

    def _call_value(self, e: ast.Call, pre: list[Goal]) -> Any:
        name, args, n = e.name, e.args, len(e.args)
        if (name, n) in self.functions:
            vals = [self.value(a, pre) for a in args]
            result = self.temp()
            pre.append((CALL, (name, n + 1), (*vals, result)))
            return result
        if (name, n) in ARITH_FUNCTIONS:
            expr = self.struct(name, [self.arith(a, pre) for a in args])
            result = self.temp()
            pre.append((EVAL, expr, result))
            return result
        if name == "findall" and n == 2:
            result = self.temp()
            template = self.data(args[0], pre)
            pre.append((FINDALL, template, tuple(self.goal(args[1])), result))
            return result
        if name in DATA_OPERATORS and n == 2:
            return self.struct(name, [self.value(a, pre) for a in args])
        return self._fcall(name, list(args), pre)

    def _fcall(self, name: str, args: list[ast.Expr], pre: list[Goal]) -> Slot:
        vals = tuple(self.value(a, pre) for a in args)
        result = self.temp()
        pre.append((FCALL, name, vals, result))
        return result

    def arith(self, e: ast.Expr, pre: list[Goal]) -> Any:
        """Arithmetic structure stays as data; other calls are flattened."""
        if isinstance(e, ast.Call) and (e.name, len(e.args)) in ARITH_FUNCTIONS and (e.name, len(e.args)) not in self.functions:
            return self.struct(e.name, [self.arith(a, pre) for a in e.args])
        return self.value(e, pre)

    def constraint(self, e: ast.Expr, pre: list[Goal]) -> Any:
        """Constraint arguments: arithmetic, sum/min/max/abs and nested constraints stay as data."""
        if isinstance(e, ast.Call) and e.name in CONSTRAINT_DATA and (e.name, len(e.args)) not in self.functions:
            return self.struct(e.name, [self.constraint(a, pre) for a in e.args])
        if isinstance(e, ast.Range):
            parts = [e.lo, e.hi] if e.step is None else [e.lo, e.step, e.hi]
            return self.struct("..", [self.constraint(p, pre) for p in parts])
        if isinstance(e, ast.ListExpr):
            return self._list(e, lambda x: self.constraint(x, pre))
        if isinstance(e, ast.ArrayExpr):
            return self.array([self.constraint(x, pre) for x in e.items])
        return self.value(e, pre)

    def data(self, e: ast.Expr, pre: list[Goal]) -> Any:
        """``$``-quoted: compound terms are structures; indexing and attributes still evaluate."""
        if isinstance(e, ast.Call):
            return self.struct(e.name, [self.data(a, pre) for a in e.args])
        if isinstance(e, ast.ListExpr):
            return self._list(e, lambda x: self.data(x, pre))
        if isinstance(e, ast.ArrayExpr):
            return self.array([self.data(x, pre) for x in e.items])
        if isinstance(e, ast.Range):
            parts = [e.lo, e.hi] if e.step is None else [e.lo, e.step, e.hi]
            return self.struct("..", [self.data(p, pre) for p in parts])
        if isinstance(e, ast.Quote):
            return self.data(e.expr, pre)
        return self.value(e, pre)

    # -- goals -----------------------------------------------------------------

    def goals(self, e: ast.Expr) -> tuple[Goal, ...]:
        return tuple(self.goal(e))

    def goal(self, e: ast.Expr) -> list[Goal]:
        if isinstance(e, ast.Symbol):
            if e.name == "true":
                return []
            if e.name in ("fail", "false"):
                return [(FAIL,)]
            if (e.name, 0) in self.functions:
                return [(CALL, (e.name, 1), (ANON,))]
            return [(CALL, (e.name, 0), ())]
        if isinstance(e, ast.Variable):
            return [(CALLTERM, self._var(e), ())]
        if isinstance(e, ast.Quote):
            return self.goal(e.expr)
        if not isinstance(e, ast.Call):
            raise self.error(f"{type(e).__name__} is not a goal")

        name, args, n = e.name, e.args, len(e.args)
        if name == "," and n == 2:
            return self.goal(args[0]) + self.goal(args[1])
        if name == ";" and n == 2:
            left, right = args
            if isinstance(left, ast.Call) and left.name == "->" and len(left.args) == 2:
                return [(ITE, self.goals(left.args[0]), self.goals(left.args[1]), self.goals(right))]
            return [(OR, self.goals(left), self.goals(right))]
        if name == "->" and n == 2:
            return [(ITE, self.goals(args[0]), self.goals(args[1]), ((FAIL,),))]
        if name in ("not", "\\+") and n == 1:
            return [(ITE, self.goals(args[0]), ((FAIL,),), ())]
        if name == "once" and n == 1:
            return [(ITE, self.goals(args[0]), (), ((FAIL,),))]

        pre: list[Goal] = []
        if name == "call" and n >= 1:
            target = self.data(args[0], pre)
            extra = tuple(self.value(a, pre) for a in args[1:])
            return [*pre, (CALLTERM, target, extra)]
        if name == "findall" and n == 3:
            template = self.data(args[0], pre)
            result = self.value(args[2], pre)
            return [*pre, (FINDALL, template, self.goals(args[1]), result)]
        if name == "=" and n == 2:
            a = self.value(args[0], pre)
            b = self.value(args[1], pre)
            return [*pre, (UNIFY, a, b)]
        if name in ARITH_COMPARISONS and n == 2:
            vals = tuple(self.arith(a, pre) for a in args)
            return [*pre, (CALL, (name, 2), vals)]
        if name in CONSTRAINT_GOALS:
            vals = tuple(self.constraint(a, pre) for a in args)
            return [*pre, (CALL, (name, n), vals)]
        vals = tuple(self.value(a, pre) for a in args)
        if (name, n) in self.functions:
            return [*pre, (CALL, (name, n + 1), (*vals, ANON))]
        return [*pre, (CALL, (name, n), vals)]

    # -- rules -----------------------------------------------------------------

    def rule(self, rule: ast.SourceRule, is_function: bool) -> Clause:
        self.line = rule.line
        head_args = rule.head.args if isinstance(rule.head, ast.Call) else ()
        body_pre: list[Goal] = []
        if is_fact(rule) and not is_function:
            # facts unify with the call
            head = [self.temp() for _ in head_args]
            unify = [(UNIFY, s, self.data(a, body_pre)) for s, a in zip(head, head_args)]
            return Clause(
                head=tuple(head),
                nslots=self.nslots,
                cond=(),
                body=(*body_pre, *unify),
                backtrackable=True,
                line=rule.line,
            )
        head = [self.pattern(a) for a in head_args]
        if is_function:
            result = self.temp()
            head.append(result)
        cond = self.goals(rule.cond)
        body = self.goal(rule.body)
        if is_function:
            value = self.value(rule.return_expr or ast.TRUE, body_pre)
            body += [*body_pre, (UNIFY, result, value)]
        return Clause(
            head=tuple(head),
            nslots=self.nslots,
            cond=cond,
            body=tuple(body),
            backtrackable=rule.kind == "backtrackable",
            line=rule.line,
        )


def is_fact(rule: ast.SourceRule) -> bool:
    return rule.kind == "backtrackable" and rule.cond == ast.TRUE and rule.body == ast.TRUE


def function_keys(program: ast.Program) -> set[tuple[str, int]]:
    return {(p.name, p.arity) for p in program.predicates.values() if p.is_function}


def compile_predicate(pred: ast.PredicateDef, functions: set[tuple[str, int]], store: TermStore, filename: str) -> Predicate:
    arity = pred.arity + 1 if pred.is_function else pred.arity
    out = Predicate(
        pred.name,
        arity,
        tabled=pred.tabled,
        modes=None if pred.table_decl is None else tuple(pred.table_decl.modes),
        is_function=pred.is_function,
    )
    for rule in pred.rules:
        out.clauses.append(RuleCompiler(functions, store, filename).rule(rule, pred.is_function))
    return out


def compile_program(program: ast.Program, store: TermStore | None = None) -> dict[tuple[str, int], Predicate]:
    """Compile a lowered program; keys are runtime name/arity (functions take one more)."""
    store = store or TermStore()
    functions = function_keys(program)
    out: dict[tuple[str, int], Predicate] = {}
    for pred in program.predicates.values():
        compiled = compile_predicate(pred, functions, store, program.filename)
        if compiled.key in out:
            raise ParseError(
                f"function {pred.name}/{pred.arity} clashes with predicate {compiled.indicator}",
                program.filename,
                pred.rules[0].line if pred.rules else 0,
                0,
            )
        out[compiled.key] = compiled
    logger.debug("compiled %d predicates", len(out))
    return out


def compile_query(
    goal: ast.Expr, functions: set[tuple[str, int]], store: TermStore
) -> tuple[tuple[Goal, ...], RuleCompiler]:
    """Compile a query goal; the returned compiler maps variable names to slots."""
    rc = RuleCompiler(functions, store, "<query>")
    return rc.goals(goal), rc
