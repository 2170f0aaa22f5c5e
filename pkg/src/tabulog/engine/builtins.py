"""Builtin registry and the core builtin library.

Three kinds of builtins are registered by name and arity:

- predicates: ``fn(engine, *args) -> bool``,
- nondeterministic predicates: generators following the protocol described
  in :mod:`tabulog.engine.machine`,
- functions: ``fn(engine, *args) -> Term``.
"""

from __future__ import annotations

import importlib
import logging
from collections.abc import Callable, Iterator
from typing import TYPE_CHECKING, Any

from tabulog.engine.arith import compare
from tabulog.errors import (
    EvaluationError,
    InstantiationError,
    TermIndexError,
    TermTypeError,
    UserError,
)
from tabulog.terms.ops import (
    OrderKey,
    collection_items,
    copy_term,
    deref,
    format_term,
    is_ground,
    is_proper_list,
    iter_list,
    list_items,
    term_equal,
)
from tabulog.terms.types import NIL, Array, Atom, Cons, Struct, Term, Var, make_list

if TYPE_CHECKING:
    from tabulog.engine.machine import Engine

logger = logging.getLogger(__name__)

# Modules that register builtins on import.
BUILTIN_MODULES = [
    "tabulog.engine.builtins",
    "tabulog.engine.fd",
    "tabulog.planner.search",
]

Key = tuple[str, int]


class BuiltinRegistry:
    def __init__(self) -> None:
        self.predicates: dict[Key, Callable[..., bool]] = {}
        self.nondeterministic: dict[Key, Callable[..., Iterator[None]]] = {}
        self.functions: dict[Key, Callable[..., Term]] = {}
        self._loaded = False

    def load_all(self) -> None:
        if self._loaded:
            return
        for module_path in BUILTIN_MODULES:
            importlib.import_module(module_path)
        self._loaded = True
        logger.debug(
            "builtins loaded: %d predicates, %d nondeterministic, %d functions",
            len(self.predicates),
            len(self.nondeterministic),
            len(self.functions),
        )

    def names(self) -> set[Key]:
        return set(self.predicates) | set(self.nondeterministic) | set(self.functions)


_registry: BuiltinRegistry | None = None


def get_registry() -> BuiltinRegistry:
    global _registry
    if _registry is None:
        _registry = BuiltinRegistry()
    return _registry


def predicate(name: str, arity: int) -> Callable[[Callable[..., bool]], Callable[..., bool]]:
    def wrap(fn: Callable[..., bool]) -> Callable[..., bool]:
        get_registry().predicates[(name, arity)] = fn
        return fn

    return wrap


def nondeterministic(name: str, arity: int) -> Callable[[Callable[..., Iterator[None]]], Callable[..., Iterator[None]]]:
    def wrap(fn: Callable[..., Iterator[None]]) -> Callable[..., Iterator[None]]:
        get_registry().nondeterministic[(name, arity)] = fn
        return fn

    return wrap


def function(name: str, arity: int) -> Callable[[Callable[..., Term]], Callable[..., Term]]:
    def wrap(fn: Callable[..., Term]) -> Callable[..., Term]:
        get_registry().functions[(name, arity)] = fn
        return fn

    return wrap


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------


def int_arg(t: Term, what: str = "integer") -> int:
    t = deref(t)
    if type(t) is int:
        return t
    if type(t) is Var:
        raise InstantiationError(f"{what} expected, got an unbound variable", t)
    raise TermTypeError(f"{what} expected, got {format_term(t)}", t)


def atom_arg(t: Term) -> Atom:
    t = deref(t)
    if type(t) is Atom:
        return t
    if type(t) is Var:
        raise InstantiationError("atom expected, got an unbound variable", t)
    raise TermTypeError(f"atom expected, got {format_term(t)}", t)


def text_of(t: Term) -> str:
    """Character lists print as text; everything else in standard syntax."""
    t = deref(t)
    if type(t) is Cons and is_proper_list(t):
        items = [deref(x) for x in list_items(t)]
        if all(type(x) is Atom and len(x.name) == 1 for x in items):
            return "".join(x.name for x in items)  # type: ignore[union-attr]
    if type(t) is Atom:
        return t.name
    return format_term(t)


def sorted_terms(items: list[Term], reverse: bool = False) -> list[Term]:
    return sorted(items, key=OrderKey, reverse=reverse)


# ---------------------------------------------------------------------------
# Control, comparison and type checks
# ---------------------------------------------------------------------------


@predicate("throw", 1)
def _throw(m: Engine, t: Term) -> bool:
    raise UserError(text_of(t), copy_term(t))


@predicate("!=", 2)
@predicate("\\=", 2)
def _not_unifiable(m: Engine, a: Term, b: Term) -> bool:
    mark = m.mark()
    ok = m.unify(a, b)
    m.undo(mark)
    return not ok


@predicate("==", 2)
def _identical(m: Engine, a: Term, b: Term) -> bool:
    return term_equal(a, b)


@predicate("!==", 2)
def _not_identical(m: Engine, a: Term, b: Term) -> bool:
    return not term_equal(a, b)


def _comparison(op: str) -> Callable[..., bool]:
    def check(m: Engine, a: Term, b: Term) -> bool:
        return compare(op, a, b)

    return check


for _op in ("<", ">", "=<", ">=", "=:=", "=\\="):
    predicate(_op, 2)(_comparison(_op))


@predicate("var", 1)
def _var(m: Engine, t: Term) -> bool:
    return type(deref(t)) is Var


@predicate("nonvar", 1)
def _nonvar(m: Engine, t: Term) -> bool:
    return type(deref(t)) is not Var


@predicate("integer", 1)
@predicate("int", 1)
def _integer(m: Engine, t: Term) -> bool:
    return type(deref(t)) is int


@predicate("atom", 1)
def _atom(m: Engine, t: Term) -> bool:
    return type(deref(t)) is Atom


@predicate("is_list", 1)
@predicate("list", 1)
def _is_list(m: Engine, t: Term) -> bool:
    return is_proper_list(t)


@predicate("array", 1)
def _array(m: Engine, t: Term) -> bool:
    return type(deref(t)) is Array


@predicate("ground", 1)
def _ground(m: Engine, t: Term) -> bool:
    return is_ground(t)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


@predicate("write", 1)
@predicate("print", 1)
def _write(m: Engine, t: Term) -> bool:
    m.out.write(text_of(t))
    return True


@predicate("writeln", 1)
@predicate("println", 1)
def _writeln(m: Engine, t: Term) -> bool:
    m.out.write(text_of(t) + "\n")
    return True


@predicate("nl", 0)
def _nl(m: Engine) -> bool:
    m.out.write("\n")
    return True


# ---------------------------------------------------------------------------
# Nondeterministic list predicates
# ---------------------------------------------------------------------------


@nondeterministic("member", 2)
def _member(m: Engine, x: Term, lst: Term) -> Iterator[None]:
    t = deref(lst)
    while type(t) is Cons:
        mark = m.mark()
        if m.unify(x, t.head):
            yield
        m.undo(mark)
        t = deref(t.tail)


@nondeterministic("select", 3)
def _select(m: Engine, x: Term, lst: Term, rest: Term) -> Iterator[None]:
    items = list_items(lst)
    for i, item in enumerate(items):
        mark = m.mark()
        if m.unify(x, item) and m.unify(rest, make_list(items[:i] + items[i + 1 :])):
            yield
        m.undo(mark)


@nondeterministic("append", 3)
def _append(m: Engine, xs: Term, ys: Term, zs: Term) -> Iterator[None]:
    if is_proper_list(xs):
        mark = m.mark()
        if m.unify(zs, make_list(list_items(xs), ys)):
            yield
        m.undo(mark)
        return
    whole = list_items(zs)
    for i in range(len(whole) + 1):
        mark = m.mark()
        if m.unify(xs, make_list(whole[:i])) and m.unify(ys, make_list(whole[i:])):
            yield
        m.undo(mark)


@nondeterministic("between", 3)
def _between(m: Engine, lo: Term, hi: Term, x: Term) -> Iterator[None]:
    low, high = int_arg(lo), int_arg(hi)
    v = deref(x)
    if type(v) is int:
        if low <= v <= high:
            yield
        return
    for i in range(low, high + 1):
        mark = m.mark()
        if m.unify(x, i):
            yield
        m.undo(mark)


@predicate("length", 2)
def _length2(m: Engine, lst: Term, n: Term) -> bool:
    if is_proper_list(lst):
        return m.unify(n, len(list_items(lst)))
    size = int_arg(n, "length")
    return m.unify(lst, make_list(Var() for _ in range(size)))


@predicate("nth", 3)
def _nth(m: Engine, i: Term, lst: Term, x: Term) -> bool:
    return m.unify(x, index_into(lst, int_arg(i, "index")))


# ---------------------------------------------------------------------------
# Functions on lists, arrays and structures
# ---------------------------------------------------------------------------


def index_into(base: Term, i: int) -> Term:
    b = deref(base)
    if type(b) is Var:
        raise InstantiationError("indexing an unbound variable", b)
    if type(b) is Array:
        items: tuple[Term, ...] | list[Term] = b.elems
    elif type(b) is Struct:
        items = b.args
    elif type(b) is Cons or b is NIL:
        items = list_items(b)
    else:
        raise TermTypeError(f"cannot index {format_term(b)}", b)
    if not 1 <= i <= len(items):
        raise TermIndexError(f"index {i} out of range 1..{len(items)}", b)
    return items[i - 1]


@function("$index", 2)
def _index(m: Engine, base: Term, i: Term) -> Term:
    return index_into(base, int_arg(i, "index"))


@function("$index", 3)
def _index2(m: Engine, base: Term, i: Term, j: Term) -> Term:
    return index_into(index_into(base, int_arg(i, "index")), int_arg(j, "index"))


@function("$index", 4)
def _index3(m: Engine, base: Term, i: Term, j: Term, k: Term) -> Term:
    row = index_into(index_into(base, int_arg(i, "index")), int_arg(j, "index"))
    return index_into(row, int_arg(k, "index"))


@function("get", 2)
def _get(m: Engine, base: Term, attr: Term) -> Term:
    name = atom_arg(attr).name
    b = deref(base)
    if name == "length":
        if type(b) is Array:
            return len(b.elems)
        if type(b) is Struct:
            return len(b.args)
        if type(b) is Atom and b is not NIL:
            return 0
        return len(list_items(b))
    if name == "name":
        if type(b) is Struct:
            return Atom(b.name)
        if type(b) is Atom:
            return b
    if name == "arity":
        if type(b) is Struct:
            return len(b.args)
        if type(b) is Atom:
            return 0
    if type(b) is Var:
        raise InstantiationError(f"attribute {name} of an unbound variable", b)
    raise TermTypeError(f"no attribute {name} on {format_term(b)}", b)


@function("..", 2)
def _range(m: Engine, lo: Term, hi: Term) -> Term:
    return make_list(range(int_arg(lo), int_arg(hi) + 1))


@function("..", 3)
def _range_step(m: Engine, lo: Term, step: Term, hi: Term) -> Term:
    s = int_arg(step, "step")
    if s == 0:
        raise EvaluationError("range step must not be zero")
    a, b = int_arg(lo), int_arg(hi)
    return make_list(range(a, b + 1 if s > 0 else b - 1, s))


@function("$iter", 1)
@function("to_list", 1)
def _to_list(m: Engine, t: Term) -> Term:
    if is_proper_list(t):
        return t
    return make_list(collection_items(t))


@function("to_array", 1)
def _to_array(m: Engine, t: Term) -> Term:
    return Array(tuple(collection_items(t)))


@function("len", 1)
@function("length", 1)
def _len(m: Engine, t: Term) -> Term:
    return _get(m, t, Atom("length"))


@function("++", 2)
def _concat(m: Engine, a: Term, b: Term) -> Term:
    return make_list(list_items(a), b)


@function("reverse", 1)
def _reverse(m: Engine, t: Term) -> Term:
    return make_list(reversed(list_items(t)))


@function("head", 1)
@function("first", 1)
def _head(m: Engine, t: Term) -> Term:
    t = deref(t)
    if type(t) is not Cons:
        raise TermTypeError(f"non-empty list expected, got {format_term(t)}", t)
    return t.head


@function("tail", 1)
def _tail(m: Engine, t: Term) -> Term:
    t = deref(t)
    if type(t) is not Cons:
        raise TermTypeError(f"non-empty list expected, got {format_term(t)}", t)
    return t.tail


@function("last", 1)
def _last(m: Engine, t: Term) -> Term:
    items = list_items(t)
    if not items:
        raise TermTypeError("last of an empty list", t)
    return items[-1]


@function("sum", 1)
def _sum(m: Engine, t: Term) -> Term:
    from tabulog.engine.arith import evaluate

    return sum(evaluate(x) for x in collection_items(t))


@function("max", 1)
def _max(m: Engine, t: Term) -> Term:
    items = collection_items(t)
    if not items:
        raise TermTypeError("max of an empty collection", t)
    return sorted_terms(items)[-1]


@function("min", 1)
def _min(m: Engine, t: Term) -> Term:
    items = collection_items(t)
    if not items:
        raise TermTypeError("min of an empty collection", t)
    return sorted_terms(items)[0]


@function("sort", 1)
def _sort(m: Engine, t: Term) -> Term:
    out: list[Term] = []
    for x in sorted_terms(list_items(t)):
        if not out or not term_equal(out[-1], x):
            out.append(x)
    return make_list(out)


@function("sort_down", 1)
def _sort_down(m: Engine, t: Term) -> Term:
    out: list[Term] = []
    for x in sorted_terms(list_items(t), reverse=True):
        if not out or not term_equal(out[-1], x):
            out.append(x)
    return make_list(out)


@function("msort", 1)
def _msort(m: Engine, t: Term) -> Term:
    return make_list(sorted_terms(list_items(t)))


@function("insert_ordered", 2)
def _insert_ordered(m: Engine, t: Term, x: Term) -> Term:
    items = list_items(t)
    key = OrderKey(x)
    i = 0
    while i < len(items) and not key < OrderKey(items[i]):
        i += 1
    return make_list([*items[:i], x, *items[i:]])


@function("delete", 2)
def _delete(m: Engine, t: Term, x: Term) -> Term:
    """Remove the first element that unifies with ``x``."""
    items = list_items(t)
    for i, item in enumerate(items):
        mark = m.mark()
        ok = m.unify(item, x)
        m.undo(mark)
        if ok:
            return make_list(items[:i] + items[i + 1 :])
    return t


@function("new_list", 1)
def _new_list(m: Engine, n: Term) -> Term:
    return make_list(Var() for _ in range(int_arg(n, "size")))


@function("new_list", 2)
def _new_list_init(m: Engine, n: Term, init: Term) -> Term:
    return make_list(init for _ in range(int_arg(n, "size")))


def _new_array(sizes: list[int]) -> Term:
    if len(sizes) == 1:
        return Array(tuple(Var() for _ in range(sizes[0])))
    return Array(tuple(_new_array(sizes[1:]) for _ in range(sizes[0])))


@function("new_array", 1)
def _new_array1(m: Engine, n: Term) -> Term:
    return _new_array([int_arg(n, "size")])


@function("new_array", 2)
def _new_array2(m: Engine, n: Term, k: Term) -> Term:
    return _new_array([int_arg(n, "size"), int_arg(k, "size")])


@function("new_array", 3)
def _new_array3(m: Engine, n: Term, k: Term, j: Term) -> Term:
    return _new_array([int_arg(n, "size"), int_arg(k, "size"), int_arg(j, "size")])


@function("copy_term", 1)
def _copy_term(m: Engine, t: Term) -> Term:
    return copy_term(t)


@function("zip", 2)
def _zip(m: Engine, a: Term, b: Term) -> Term:
    return make_list(Struct(",", (x, y)) for x, y in zip(list_items(a), list_items(b)))


@function("abs", 1)
def _abs(m: Engine, t: Term) -> Term:
    return abs(int_arg(t))


def list_of(t: Term) -> list[Term]:
    """Elements of a list or array argument."""
    return collection_items(t)


def iter_values(t: Term) -> Iterator[Term]:
    yield from iter_list(t)


def is_callable_term(t: Any) -> bool:
    t = deref(t)
    return type(t) is Atom or type(t) is Struct
