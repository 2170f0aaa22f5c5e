"""Finite-domain constraints on engine variables.

A constrained engine variable carries the id of its store variable in its
``attr`` slot. The store shares the engine's trail, so domains, propagators
and attributes are restored by ordinary backtracking. Whenever propagation
fixes a store variable, the engine variable is bound to the value.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator
from functools import partial
from typing import TYPE_CHECKING

from tabulog.engine.builtins import function, int_arg, list_of, nondeterministic, predicate
from tabulog.errors import InstantiationError, TermTypeError, UnsupportedConstraint
from tabulog.lang.compiler import BOOLEAN_CONNECTIVES, CONSTRAINT_RELATIONS
from tabulog.solvers.cp import CpStore, label, optimize
from tabulog.solvers.dispatch import Outputs, backend_from_imports, select_backend, snapshot_solutions
from tabulog.solvers.domain import Domain
from tabulog.solvers.model import (
    AllDifferent,
    Conn,
    Constraint,
    Element,
    Expr,
    Formula,
    Objective,
    Op,
    Ref,
    Rel,
    Table,
    expr_refs,
)
from tabulog.terms.ops import collection_items, deref, format_term, term_vars
from tabulog.terms.types import NIL, Array, Atom, Cons, Struct, Term, Var, make_list

if TYPE_CHECKING:
    from tabulog.engine.machine import Engine

logger = logging.getLogger(__name__)

BINARY_OPS = {"+": "+", "-": "-", "*": "*", "div": "div", "mod": "mod", "min": "min", "max": "max"}
LABELINGS = {"ff": "ff", "default": "default", "leftmost": "default"}


def _clear_attr(v: Var) -> None:
    v.attr = None


class FdBridge:
    def __init__(self, engine: Engine) -> None:
        self.engine = engine
        self.store = CpStore(engine.settings, engine.trail, engine.undo)
        self.vars: dict[int, Var] = {}
        self.outputs = Outputs()

    # -- variables ---------------------------------------------------------------

    def _attach(self, v: Var, vid: int) -> None:
        v.attr = vid
        self.engine.trail.append(partial(_clear_attr, v))
        self.vars[vid] = v

    def var_of(self, v: Var, domain: Domain | None = None) -> int:
        """The store variable behind ``v``, created on first use."""
        if v.attr is not None:
            return int(v.attr)
        if domain is None:
            bound = self.engine.settings.default_int_bound
            domain = Domain.interval(-bound, bound)
        vid = self.store.new_var(domain, v.name)
        self._attach(v, vid)
        if domain.fixed:
            self.store.newly_fixed.append(vid)
        return vid

    def sync(self) -> bool:
        """Bind engine variables whose store variables became fixed."""
        store = self.store
        while store.newly_fixed:
            pending = store.newly_fixed
            store.newly_fixed = []
            for vid in pending:
                if vid >= len(store.doms) or not store.is_fixed(vid):
                    continue
                v = self.vars.get(vid)
                if v is None:
                    continue
                t = deref(v)
                if type(t) is Var and t.attr == vid and not self.engine.bind(t, store.value(vid)):
                    store.newly_fixed = []
                    return False
        return True

    def on_bind(self, v: Var, t: Term) -> bool:
        """Called by the engine when attributed variable ``v`` has just been bound to ``t``."""
        vid = int(v.attr)
        t = deref(t)
        if type(t) is int:
            store = self.store
            if store.is_fixed(vid) and store.value(vid) == t:
                return True
            return self._settle(store.assign(vid, t))
        if type(t) is Var:
            if t.attr is None:
                self._attach(t, vid)
                return True
            if t.attr == vid:
                return True
            return self.post(Rel("#=", Ref(vid), Ref(int(t.attr))))
        return False

    def _settle(self, ok: bool) -> bool:
        if not ok:
            self.store.newly_fixed = []
            return False
        return self.sync()

    def post(self, c: Constraint) -> bool:
        return self._settle(self.store.post(c))

    # -- terms to model expressions ------------------------------------------------

    def expr(self, t: Term) -> Expr:
        t = deref(t)
        if type(t) is int:
            return t
        if type(t) is Var:
            return Ref(self.var_of(t))
        if type(t) is Struct:
            name, args = t.name, t.args
            if len(args) == 2 and name in BINARY_OPS:
                return Op(BINARY_OPS[name], (self.expr(args[0]), self.expr(args[1])))
            if len(args) == 1:
                if name == "-":
                    return Op("neg", (self.expr(args[0]),))
                if name == "+":
                    return self.expr(args[0])
                if name == "abs":
                    return Op("abs", (self.expr(args[0]),))
                if name in ("sum", "min", "max"):
                    return self._fold(name, [self.expr(a) for a in list_of(args[0])])
            raise UnsupportedConstraint("model", f"function {name}/{len(args)} in {format_term(t)}")
        raise TermTypeError(f"not a constraint expression: {format_term(t)}", t)

    def _fold(self, name: str, items: list[Expr]) -> Expr:
        if not items:
            if name == "sum":
                return 0
            raise TermTypeError(f"{name} of an empty list")
        op = "+" if name == "sum" else name
        out = items[0]
        for e in items[1:]:
            out = Op(op, (out, e))
        return out

    def formula(self, t: Term) -> Formula:
        t = deref(t)
        if type(t) is Struct:
            name, args = t.name, t.args
            if name in CONSTRAINT_RELATIONS and len(args) == 2:
                return Rel(name, self.expr(args[0]), self.expr(args[1]))
            if name == "#~" and len(args) == 1:
                return Conn(name, (self.formula(args[0]),))
            if name in BOOLEAN_CONNECTIVES and len(args) == 2:
                return Conn(name, (self.formula(args[0]), self.formula(args[1])))
        return self.expr(t)

    def exprs(self, t: Term) -> tuple[Expr, ...]:
        return tuple(self.expr(x) for x in collection_items(t))

    # -- domains -------------------------------------------------------------------

    def domain_of(self, t: Term) -> Domain:
        t = deref(t)
        if type(t) is Struct and t.name == ".." and len(t.args) in (2, 3):
            bounds = [int_arg(a, "domain bound") for a in t.args]
            if len(bounds) == 2:
                return Domain.interval(bounds[0], bounds[1])
            lo, step, hi = bounds
            if step == 0:
                raise TermTypeError("range step must be non-zero", t)
            return Domain.of(range(lo, hi + (1 if step > 0 else -1), step))
        if type(t) is int:
            return Domain.value(t)
        return Domain.of(int_arg(x, "domain value") for x in list_of(t))

    def declare(self, vs: Term, dom: Term) -> bool:
        domain = self.domain_of(dom)
        t = deref(vs)
        items = [t] if type(t) in (Var, int) else collection_items(t)
        for x in items:
            x = deref(x)
            if type(x) is int:
                if x not in domain:
                    return False
            elif type(x) is Var:
                if x.attr is None:
                    if domain.empty:
                        return False
                    self.var_of(x, domain)
                elif not self.store.narrow(int(x.attr), domain):
                    return self._settle(False)
            else:
                raise TermTypeError(f"domain variable expected, got {format_term(x)}", x)
        return self._settle(self.store.propagate())

    def values(self, t: Term) -> list[int]:
        t = deref(t)
        if type(t) is int:
            return [t]
        if type(t) is Var:
            if t.attr is None:
                raise InstantiationError("variable has no domain", t)
            return list(self.store.dom(int(t.attr)))
        raise TermTypeError(f"domain variable expected, got {format_term(t)}", t)

    # -- solving -------------------------------------------------------------------

    def solve(self, options: Term, vs: Term) -> Iterator[None]:
        strategy = "default"
        objective: Objective | None = None
        requested: str | None = None
        for opt in list_of(options):
            opt = deref(opt)
            if type(opt) is Atom and opt.name in LABELINGS:
                strategy = LABELINGS[opt.name]
            elif type(opt) is Atom and opt.name in ("cp", "sat", "mip"):
                requested = opt.name
            elif type(opt) is Struct and opt.name in ("min", "max") and len(opt.args) == 1:
                objective = Objective(opt.name, self.expr(opt.args[0]))
            else:
                logger.warning("ignoring unsupported solve option %s", format_term(opt))
        engine = self.engine
        backend = select_backend(
            requested, engine.backend, backend_from_imports(engine.imports), settings=engine.settings
        )
        vids: list[int] = []
        for v in term_vars(vs):
            vid = self.var_of(v)
            if vid not in vids:
                vids.append(vid)
        logger.info("solve over %d variables with %s (%s)", len(vids), backend, strategy)
        if backend == "cp":
            yield from self._solve_cp(vids, strategy, objective)
        else:
            yield from self._solve_snapshot(backend, vids, objective)

    def _assign(self, vid: int, value: int) -> bool:
        return self._settle(self.store.assign(vid, value))

    def _solve_cp(self, vids: list[int], strategy: str, objective: Objective | None) -> Iterator[None]:
        store = self.store
        mark = store.mark()
        if self._settle(store.propagate()):
            if objective is None:
                search = label(store, vids, strategy, self._assign)
            else:
                target = store.expr_var(objective.expr)
                search = optimize(store, vids, target, objective.sense, strategy, self._assign)
            for _ in search:
                if self.sync():
                    yield
        store.undo(mark)

    def _solve_snapshot(self, backend: str, vids: list[int], objective: Objective | None) -> Iterator[None]:
        store = self.store
        mark = store.mark()
        if not self._settle(store.propagate()):
            store.undo(mark)
            return
        model = store.model(vids)
        if objective is not None:
            refs = sorted(v for v in expr_refs(objective.expr) if v not in model.domains)
            for v in refs:
                model.domains[v] = store.dom(v)
            model.objective = objective
        for assignment in snapshot_solutions(backend, model, vids, self.engine.settings, self.outputs):  # type: ignore[arg-type]
            inner = store.mark()
            if all(self._assign(v, assignment[v]) for v in vids):
                yield
            store.undo(inner)
        store.undo(mark)


# ---------------------------------------------------------------------------
# Builtins
# ---------------------------------------------------------------------------


@predicate("::", 2)
def _in(m: Engine, vs: Term, dom: Term) -> bool:
    return bool(m.fd.declare(vs, dom))


def _relation(op: str):  # type: ignore[no-untyped-def]
    def post(m: Engine, a: Term, b: Term) -> bool:
        fd = m.fd
        return bool(fd.post(Rel(op, fd.expr(a), fd.expr(b))))

    return post


for _op in CONSTRAINT_RELATIONS:
    predicate(_op, 2)(_relation(_op))


def _connective(op: str):  # type: ignore[no-untyped-def]
    def post(m: Engine, *args: Term) -> bool:
        fd = m.fd
        return bool(fd.post(Conn(op, tuple(fd.formula(a) for a in args))))

    return post


for _op in BOOLEAN_CONNECTIVES:
    predicate(_op, 1 if _op == "#~" else 2)(_connective(_op))


@predicate("all_different", 1)
@predicate("all_distinct", 1)
def _all_different(m: Engine, vs: Term) -> bool:
    fd = m.fd
    return bool(fd.post(AllDifferent(fd.exprs(vs))))


@predicate("element", 3)
def _element(m: Engine, i: Term, lst: Term, v: Term) -> bool:
    fd = m.fd
    return bool(fd.post(Element(fd.expr(i), fd.exprs(lst), fd.expr(v))))


def _rows(t: Term) -> list[Term]:
    """``table_in`` accepts one tuple of variables or a list of them."""
    t = deref(t)
    if type(t) is Array:
        return [t]
    items = [deref(x) for x in list_of(t)]
    if items and all(type(x) is Array or type(x) is Cons for x in items):
        return items
    return [make_list(items)]


def _table(negated: bool):  # type: ignore[no-untyped-def]
    def post(m: Engine, vs: Term, tuples: Term) -> bool:
        fd = m.fd
        allowed = tuple(tuple(int_arg(x, "table value") for x in collection_items(row)) for row in list_of(tuples))
        for row in _rows(vs):
            args = fd.exprs(row)
            if any(len(tup) != len(args) for tup in allowed):
                raise TermTypeError("table tuples must match the arity of the variable tuple", tuples)
            if not fd.post(Table(args, allowed, negated)):
                return False
        return True

    return post


predicate("table_in", 2)(_table(False))
predicate("table_notin", 2)(_table(True))


@predicate("circuit", 1)
def _circuit(m: Engine, vs: Term) -> bool:
    raise UnsupportedConstraint("cp", "circuit/1")


@predicate("cumulative", 4)
def _cumulative(m: Engine, *args: Term) -> bool:
    raise UnsupportedConstraint("cp", "cumulative/4")


@nondeterministic("solve", 1)
def _solve1(m: Engine, vs: Term) -> Iterator[None]:
    return m.fd.solve(NIL, vs)  # type: ignore[no-any-return]


@nondeterministic("solve", 2)
def _solve2(m: Engine, options: Term, vs: Term) -> Iterator[None]:
    return m.fd.solve(options, vs)  # type: ignore[no-any-return]


@function("fd_dom", 1)
def _fd_dom(m: Engine, t: Term) -> Term:
    return make_list(m.fd.values(t))


@function("fd_min", 1)
def _fd_min(m: Engine, t: Term) -> Term:
    return min(m.fd.values(t))


@function("fd_max", 1)
def _fd_max(m: Engine, t: Term) -> Term:
    return max(m.fd.values(t))


@function("fd_size", 1)
def _fd_size(m: Engine, t: Term) -> Term:
    return len(m.fd.values(t))
