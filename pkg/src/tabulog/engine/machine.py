"""The execution engine.

Execution is iterative. A continuation is a linked tuple
``(goal, env, next)``; ``env`` is the slot list of the clause activation the
goal belongs to. Choice points live on a per-:meth:`Engine.solve` stack:

- ``ALT``: the alternative branch of a disjunction or if-then-else,
- ``RULES``: the remaining clauses of a call,
- ``ITER``: a nondeterministic builtin (a generator).

The trail holds bound variables and undo callables (domain changes made by
the constraint store). Backtracking undoes the trail to the choice point's
mark.

Protocol for nondeterministic builtins: a generator yields with its
bindings in place, and on being resumed it undoes the bindings it made for
the previous answer itself. The engine takes an ``ITER`` mark *after* each
yield, so it only undoes what the continuation did.
"""

from __future__ import annotations

import sys
from collections.abc import Iterator
from pathlib import Path
from typing import Any

import structlog

from tabulog.config import Settings, get_settings
from tabulog.engine.arith import evaluate
from tabulog.engine.builtins import get_registry
from tabulog.engine.unify import build, match, unify
from tabulog.errors import InstantiationError, TermTypeError, UnknownPredicate, UnresolvedFunctionCall
from tabulog.lang import ast
from tabulog.lang.compiler import (
    CALL,
    CALLTERM,
    CUT,
    EVAL,
    FAIL,
    FCALL,
    FINDALL,
    ITE,
    OR,
    RULES,
    UNIFY,
    Goal,
    Predicate,
    Slot,
    compile_predicate,
    compile_program,
    compile_query,
    function_keys,
)
from tabulog.lang.lowering import lower_loops, lower_query
from tabulog.lang.parser import parse_goal, parse_program
from tabulog.terms.ops import copy_term, deref, format_term, resolve
from tabulog.terms.store import TermStore
from tabulog.terms.types import Atom, Struct, Term, Var, make_list

log = structlog.get_logger(__name__)

ALT = 0
RULES_CP = 1
ITER = 2

_FAILED = object()
_EXHAUSTED = object()

Cont = tuple[Goal, list[Any], Any] | None


def push(goals: tuple[Goal, ...], env: list[Any], cont: Cont) -> Cont:
    for g in reversed(goals):
        cont = (g, env, cont)
    return cont


def term_to_goals(t: Term) -> tuple[Goal, ...]:
    """Goal instructions for a goal given as a runtime term (``call/N``)."""
    t = deref(t)
    if type(t) is Var:
        raise InstantiationError("call of an unbound variable", t)
    if type(t) is Atom:
        if t.name == "true":
            return ()
        if t.name in ("fail", "false"):
            return ((FAIL,),)
        return ((CALL, (t.name, 0), ()),)
    if type(t) is not Struct:
        raise TermTypeError(f"callable expected, got {format_term(t)}", t)
    name, args = t.name, t.args
    if name == "," and len(args) == 2:
        return term_to_goals(args[0]) + term_to_goals(args[1])
    if name == ";" and len(args) == 2:
        left = deref(args[0])
        if type(left) is Struct and left.name == "->" and len(left.args) == 2:
            return ((ITE, term_to_goals(left.args[0]), term_to_goals(left.args[1]), term_to_goals(args[1])),)
        return ((OR, term_to_goals(left), term_to_goals(args[1])),)
    if name == "->" and len(args) == 2:
        return ((ITE, term_to_goals(args[0]), term_to_goals(args[1]), ((FAIL,),)),)
    if name in ("not", "\\+") and len(args) == 1:
        return ((ITE, term_to_goals(args[0]), ((FAIL,),), ()),)
    if name == "once" and len(args) == 1:
        return ((ITE, term_to_goals(args[0]), (), ((FAIL,),)),)
    if name == "=" and len(args) == 2:
        return ((UNIFY, args[0], args[1]),)
    return ((CALL, (name, len(args)), tuple(args)),)


class Engine:
    """A loaded program plus the machinery to run queries against it."""

    def __init__(
        self,
        program: ast.Program | None = None,
        settings: Settings | None = None,
        backend: str | None = None,
        out: Any = None,
    ) -> None:
        from tabulog.planner.search import Planner
        from tabulog.tabling.tables import Tables

        self.settings = settings or get_settings()
        if sys.getrecursionlimit() < self.settings.recursion_limit:
            sys.setrecursionlimit(self.settings.recursion_limit)
        self.store = TermStore()
        self.source = program or ast.Program()
        self.program = lower_loops(self.source)
        self.functions = function_keys(self.program)
        self.preds: dict[tuple[str, int], Predicate] = compile_program(self.program, self.store)
        self.registry = get_registry()
        self.registry.load_all()
        self.trail: list[Any] = []
        self.tables = Tables(self)
        self.planner = Planner(self)
        self.backend = backend
        self._fd: Any = None
        self._out = out
        self.calls = 0
        self.backtracks = 0

    @classmethod
    def from_source(cls, text: str, filename: str = "<string>", **kwargs: Any) -> Engine:
        return cls(parse_program(text, filename), **kwargs)

    @classmethod
    def from_file(cls, path: str | Path, **kwargs: Any) -> Engine:
        p = Path(path)
        return cls.from_source(p.read_text(encoding="utf-8"), str(p), **kwargs)

    @property
    def out(self) -> Any:
        return self._out if self._out is not None else sys.stdout

    @property
    def fd(self) -> Any:
        if self._fd is None:
            from tabulog.engine.fd import FdBridge

            self._fd = FdBridge(self)
        return self._fd

    @property
    def has_fd(self) -> bool:
        return self._fd is not None

    @property
    def imports(self) -> list[str]:
        return self.source.imports

    def stats(self) -> dict[str, int]:
        return {"calls": self.calls, "backtracks": self.backtracks}

    # -- trail -----------------------------------------------------------------

    def mark(self) -> int:
        return len(self.trail)

    def undo(self, mark: int) -> None:
        trail = self.trail
        while len(trail) > mark:
            e = trail.pop()
            if type(e) is Var:
                e.ref = None
            else:
                e()

    def bind(self, v: Var, t: Term) -> bool:
        v.ref = t
        self.trail.append(v)
        if v.attr is not None:
            return bool(self.fd.on_bind(v, t))
        return True

    def unify(self, a: Term, b: Term) -> bool:
        return unify(self, a, b)

    # -- queries ---------------------------------------------------------------

    def query(self, text: str) -> Iterator[dict[str, Term]]:
        """Solutions of ``text`` as ``{variable name: resolved value}`` dictionaries."""
        goal = parse_goal(text)
        lowered, generated = lower_query(goal, self.program)
        for pred in generated:
            self.program.predicates[pred.key] = pred
            compiled = compile_predicate(pred, self.functions, self.store, "<query>")
            self.preds[compiled.key] = compiled
        goals, rc = compile_query(lowered, self.functions, self.store)
        env: list[Any] = [None] * rc.nslots
        visible = [(n, s) for n, s in rc.slots.items() if not n.startswith("_") and "#" not in n]
        log.debug("query_start", goal=text)
        count = 0
        for _ in self.solve(goals, env):
            count += 1
            yield {name: resolve(build(slot, env)) for name, slot in visible}
        log.debug("query_finish", goal=text, solutions=count)

    def once(self, text: str) -> dict[str, Term] | None:
        it = self.query(text)
        try:
            return next(it, None)
        finally:
            it.close()

    def solve_term(self, goal: Term) -> Iterator[None]:
        """Run a goal given as a term; bindings are visible in the term between yields."""
        return self.solve(term_to_goals(goal), [])

    def call_rules(self, pred: Predicate, args: list[Term]) -> Iterator[None]:
        """Run ``pred``'s clauses directly, bypassing its answer table."""
        return self.solve(((RULES, pred.key, tuple(args)),), [])

    # -- the machine -----------------------------------------------------------

    def solve(self, goals: tuple[Goal, ...], env: list[Any]) -> Iterator[None]:
        """Yield once per solution of ``goals``. Closing the generator undoes its bindings."""
        base = len(self.trail)
        cps: list[tuple[Any, ...]] = []
        cont: Any = push(goals, env, None)
        try:
            while True:
                if cont is None:
                    yield
                    cont = self._backtrack(cps)
                    if cont is _EXHAUSTED:
                        return
                    continue
                goal, env, nxt = cont
                op = goal[0]
                if op == CALL:
                    args = [build(a, env) for a in goal[2]]
                    cont = self._call(goal[1], args, nxt, cps)
                elif op == UNIFY:
                    cont = nxt if unify(self, build(goal[1], env), build(goal[2], env)) else _FAILED
                elif op == EVAL:
                    value = evaluate(build(goal[1], env))
                    cont = nxt if self._set(goal[2], env, value) else _FAILED
                elif op == FCALL:
                    cont = self._fcall(goal, env, nxt, cps)
                elif op == ITE:
                    cps.append((ALT, len(self.trail), push(goal[3], env, nxt)))
                    cut: Goal = (CUT, len(cps) - 1)
                    cont = push(goal[1], env, (cut, env, push(goal[2], env, nxt)))
                elif op == OR:
                    cps.append((ALT, len(self.trail), push(goal[2], env, nxt)))
                    cont = push(goal[1], env, nxt)
                elif op == CUT:
                    del cps[goal[1] :]
                    cont = nxt
                elif op == FAIL:
                    cont = _FAILED
                elif op == CALLTERM:
                    target = build(goal[1], env)
                    extra = [build(a, env) for a in goal[2]]
                    cont = self._call_term(target, extra, nxt, cps)
                elif op == FINDALL:
                    results = self._findall(goal[1], goal[2], env)
                    cont = nxt if self._set(goal[3], env, make_list(results)) else _FAILED
                elif op == RULES:
                    args = [build(a, env) for a in goal[2]]
                    cont = self._try_clauses(self.preds[goal[1]], args, 0, nxt, cps)
                else:
                    raise AssertionError(f"bad instruction {goal!r}")
                if cont is _FAILED:
                    cont = self._backtrack(cps)
                    if cont is _EXHAUSTED:
                        return
        finally:
            self.undo(base)

    def _set(self, result: Any, env: list[Any], value: Term) -> bool:
        # temporaries are written by exactly one goal, so they can be overwritten
        if type(result) is Slot and result.name is None:
            env[result.index] = value
            return True
        return unify(self, build(result, env), value)

    def _backtrack(self, cps: list[tuple[Any, ...]]) -> Any:
        self.backtracks += 1
        while cps:
            cp = cps.pop()
            self.undo(cp[1])
            kind = cp[0]
            if kind == ALT:
                return cp[2]
            if kind == ITER:
                gen = cp[2]
                try:
                    next(gen)
                except StopIteration:
                    continue
                cps.append((ITER, len(self.trail), gen, cp[3]))
                return cp[3]
            nxt = self._try_clauses(cp[2], cp[3], cp[4], cp[5], cps)
            if nxt is not _FAILED:
                return nxt
        return _EXHAUSTED

    def _iterate(self, gen: Iterator[Any], cont: Any, cps: list[tuple[Any, ...]]) -> Any:
        try:
            next(gen)
        except StopIteration:
            return _FAILED
        cps.append((ITER, len(self.trail), gen, cont))
        return cont

    def _call(self, key: tuple[str, int], args: list[Term], cont: Any, cps: list[tuple[Any, ...]]) -> Any:
        self.calls += 1
        pred = self.preds.get(key)
        if pred is not None:
            if pred.tabled:
                return self._iterate(self.tables.call(pred, args), cont, cps)
            return self._try_clauses(pred, args, 0, cont, cps)
        det = self.registry.predicates.get(key)
        if det is not None:
            return cont if det(self, *args) else _FAILED
        nondet = self.registry.nondeterministic.get(key)
        if nondet is not None:
            return self._iterate(nondet(self, *args), cont, cps)
        raise UnknownPredicate(f"unknown predicate {key[0]}/{key[1]}", Atom(key[0]))

    def _try_clauses(
        self, pred: Predicate, args: list[Term], start: int, cont: Any, cps: list[tuple[Any, ...]]
    ) -> Any:
        clauses = pred.clauses
        n = len(clauses)
        for i in range(start, n):
            c = clauses[i]
            env: list[Any] = [None] * c.nslots
            for p, a in zip(c.head, args):
                if not match(p, a, env):
                    break
            else:
                if not c.cond:
                    if c.backtrackable and i + 1 < n:
                        cps.append((RULES_CP, len(self.trail), pred, args, i + 1, cont))
                    return push(c.body, env, cont)
                h = len(cps)
                cps.append((RULES_CP, len(self.trail), pred, args, i + 1, cont))
                cut: Goal = (CUT, h + 1 if c.backtrackable else h)
                return push(c.cond, env, (cut, env, push(c.body, env, cont)))
        if pred.is_function:
            call = Struct(pred.name, tuple(args[:-1])) if len(args) > 1 else Atom(pred.name)
            raise UnresolvedFunctionCall(f"no rule of {pred.indicator} applies to {format_term(call)}", call)
        return _FAILED

    def _fcall(self, goal: Goal, env: list[Any], cont: Any, cps: list[tuple[Any, ...]]) -> Any:
        _, name, targs, result = goal
        args = [build(a, env) for a in targs]
        n = len(args)
        pred = self.preds.get((name, n + 1))
        if pred is not None and pred.is_function:
            return self._call((name, n + 1), [*args, build(result, env)], cont, cps)
        fn = self.registry.functions.get((name, n))
        if fn is None:
            call = Struct(name, tuple(args)) if args else Atom(name)
            raise UnresolvedFunctionCall(f"unknown function {name}/{n} in {format_term(call)}", call)
        return cont if self._set(result, env, fn(self, *args)) else _FAILED

    def _call_term(self, t: Term, extra: list[Term], cont: Any, cps: list[tuple[Any, ...]]) -> Any:
        if not extra:
            return push(term_to_goals(t), [], cont)
        t = deref(t)
        if type(t) is Atom:
            name, args = t.name, list(extra)
        elif type(t) is Struct:
            name, args = t.name, [*t.args, *extra]
        elif type(t) is Var:
            raise InstantiationError("call of an unbound variable", t)
        else:
            raise TermTypeError(f"callable expected, got {format_term(t)}", t)
        key = (name, len(args))
        if key not in self.preds and (name, len(args) + 1) in self.preds:
            return self._call((name, len(args) + 1), [*args, Var()], cont, cps)
        return self._call(key, args, cont, cps)

    def _findall(self, template: Any, goals: tuple[Goal, ...], env: list[Any]) -> list[Term]:
        out: list[Term] = []
        for _ in self.solve(goals, env):
            out.append(copy_term(build(template, env)))
        return out
