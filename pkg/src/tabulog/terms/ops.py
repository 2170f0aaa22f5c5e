"""Term utilities: dereferencing, comparison, copying and formatting.

Everything that walks a term loops along list spines, so long lists never
hit the interpreter's recursion limit.
"""

from __future__ import annotations

from collections.abc import Iterator
from typing import Any

from tabulog.errors import InstantiationError, TermTypeError
from tabulog.terms.types import NIL, Array, Atom, Compound, Cons, Struct, Term, Var

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK64 = (1 << 64) - 1

TAG_INT = 1
TAG_ATOM = 2
TAG_CONS = 3
TAG_STRUCT = 4
TAG_ARRAY = 5


def mix(h: int, value: int) -> int:
    return ((h ^ (value & MASK64)) * FNV_PRIME) & MASK64


def hash_int(value: int) -> int:
    return mix(mix(FNV_OFFSET, TAG_INT), value)


def hash_atom(atom: Atom) -> int:
    h = atom._hash
    if not h:
        h = mix(FNV_OFFSET, TAG_ATOM)
        for byte in atom.name.encode("utf-8"):
            h = mix(h, byte)
        atom._hash = h
    return h


def hash_name(name: str) -> int:
    return hash_atom(Atom(name))


def combine(tag: int, name_hash: int, child_hashes: list[int]) -> int:
    h = mix(FNV_OFFSET, tag)
    h = mix(h, name_hash)
    h = mix(h, len(child_hashes))
    for c in child_hashes:
        h = mix(h, c)
    return h


def deref(t: Term) -> Term:
    while type(t) is Var:
        ref = t.ref
        if ref is None:
            return t
        t = ref
    return t


def children(t: Compound) -> tuple[Term, ...]:
    if type(t) is Cons:
        return (t.head, t.tail)
    if type(t) is Struct:
        return t.args
    return t.elems  # type: ignore[attr-defined]


def is_ground(t: Term) -> bool:
    stack = [t]
    seen: set[int] = set()
    while stack:
        x = deref(stack.pop())
        tx = type(x)
        if tx is Var:
            return False
        if tx is Cons or tx is Struct or tx is Array:
            if x._hash or id(x) in seen:  # interned nodes are ground
                continue
            seen.add(id(x))
            stack.extend(children(x))  # type: ignore[arg-type]
    return True


def structural_hash(t: Term) -> int:
    """Hash of a ground term computed from scratch. Same function the store caches."""
    t = deref(t)
    if type(t) is int:
        return hash_int(t)
    if type(t) is Atom:
        return hash_atom(t)
    if type(t) is Var:
        return t.serial
    if t._hash:  # type: ignore[union-attr]
        return t._hash  # type: ignore[union-attr]
    if type(t) is Cons:
        spine: list[Term] = []
        x: Term = t
        while type(x) is Cons and not x._hash:
            spine.append(x.head)
            x = deref(x.tail)
        h = structural_hash(x)
        for head in reversed(spine):
            h = combine(TAG_CONS, hash_atom(NIL), [structural_hash(head), h])
        return h
    kids = [structural_hash(c) for c in children(t)]  # type: ignore[arg-type]
    if type(t) is Struct:
        return combine(TAG_STRUCT, hash_name(t.name), kids)
    return combine(TAG_ARRAY, 0, kids)


def term_equal(a: Term, b: Term) -> bool:
    """Structural identity (``==``): variables are equal only to themselves."""
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x = deref(x)
        y = deref(y)
        if x is y:
            continue
        tx = type(x)
        if tx is not type(y):
            return False
        if tx is int:
            if x != y:
                return False
        elif tx is Cons:
            stack.append((x.tail, y.tail))  # type: ignore[union-attr]
            stack.append((x.head, y.head))  # type: ignore[union-attr]
        elif tx is Struct:
            if x.name != y.name or len(x.args) != len(y.args):  # type: ignore[union-attr]
                return False
            stack.extend(zip(x.args, y.args))  # type: ignore[union-attr]
        elif tx is Array:
            if len(x.elems) != len(y.elems):  # type: ignore[union-attr]
                return False
            stack.extend(zip(x.elems, y.elems))  # type: ignore[union-attr]
        else:
            return False
    return True


# ---------------------------------------------------------------------------
# Standard order: var < int < atom < compound
# ---------------------------------------------------------------------------

_ORDER_VAR, _ORDER_INT, _ORDER_ATOM, _ORDER_COMPOUND = range(4)


def _order_class(t: Term) -> int:
    tt = type(t)
    if tt is Var:
        return _ORDER_VAR
    if tt is int:
        return _ORDER_INT
    if tt is Atom:
        return _ORDER_ATOM
    return _ORDER_COMPOUND


def _functor(t: Term) -> tuple[int, str]:
    if type(t) is Cons:
        return 2, "."
    if type(t) is Struct:
        return len(t.args), t.name
    return len(t.elems), "{}"  # type: ignore[union-attr]


def compare_terms(a: Term, b: Term) -> int:
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x = deref(x)
        y = deref(y)
        if x is y:
            continue
        cx, cy = _order_class(x), _order_class(y)
        if cx != cy:
            return -1 if cx < cy else 1
        if cx == _ORDER_VAR:
            return -1 if x.serial < y.serial else 1  # type: ignore[union-attr]
        if cx == _ORDER_INT:
            if x != y:
                return -1 if x < y else 1  # type: ignore[operator]
            continue
        if cx == _ORDER_ATOM:
            if x.name != y.name:  # type: ignore[union-attr]
                return -1 if x.name < y.name else 1  # type: ignore[union-attr]
            continue
        fx, fy = _functor(x), _functor(y)
        if fx != fy:
            return -1 if fx < fy else 1
        # push in reverse so the first argument is compared first
        pairs = list(zip(children(x), children(y)))  # type: ignore[arg-type]
        stack.extend(reversed(pairs))
    return 0


class OrderKey:
    """Adapter so ``sorted`` can use the standard order of terms."""

    __slots__ = ("term",)

    def __init__(self, term: Term) -> None:
        self.term = term

    def __lt__(self, other: OrderKey) -> bool:
        return compare_terms(self.term, other.term) < 0

    def __eq__(self, other: object) -> bool:
        return isinstance(other, OrderKey) and compare_terms(self.term, other.term) == 0


# ---------------------------------------------------------------------------
# Lists
# ---------------------------------------------------------------------------


def iter_list(t: Term) -> Iterator[Term]:
    """Yield the elements of a proper list; raise on partial or improper lists."""
    t = deref(t)
    while type(t) is Cons:
        yield t.head
        t = deref(t.tail)
    if type(t) is Var:
        raise InstantiationError("partial list", t)
    if t is not NIL:
        raise TermTypeError(f"expected a list, got {format_term(t)}", t)


def list_items(t: Term) -> list[Term]:
    return list(iter_list(t))


def is_proper_list(t: Term) -> bool:
    t = deref(t)
    while type(t) is Cons:
        t = deref(t.tail)
    return t is NIL


def collection_items(t: Term) -> list[Term]:
    """Elements of a list, array or structure (the things an iterator can walk)."""
    t = deref(t)
    if type(t) is Array:
        return list(t.elems)
    if type(t) is Struct:
        return list(t.args)
    if type(t) is Var:
        raise InstantiationError("cannot iterate over an unbound variable", t)
    if type(t) is Cons or t is NIL:
        return list_items(t)
    raise TermTypeError(f"expected a compound value, got {format_term(t)}", t)


def term_vars(t: Term) -> list[Var]:
    """Unbound variables of ``t`` in depth-first, left-to-right order."""
    seen: set[int] = set()
    out: list[Var] = []
    stack = [t]
    while stack:
        x = deref(stack.pop())
        tx = type(x)
        if tx is Var:
            if x.serial not in seen:  # type: ignore[union-attr]
                seen.add(x.serial)  # type: ignore[union-attr]
                out.append(x)  # type: ignore[arg-type]
        elif tx is Cons or tx is Struct or tx is Array:
            if x._hash:
                continue
            stack.extend(reversed(children(x)))  # type: ignore[arg-type]
    return out


# ---------------------------------------------------------------------------
# Copying
# ---------------------------------------------------------------------------


def _rebuild(t: Term, leaf: Any, on_cycle: Any, active: set[int]) -> Term:
    """Copy ``t`` applying ``leaf`` to every unbound variable; ground interned nodes are shared.

    ``active`` holds the ids of the compound nodes on the current path; reaching one of
    them again means the term is cyclic and ``on_cycle`` decides what stands in for it.
    """
    t = deref(t)
    tt = type(t)
    if tt is Var:
        return leaf(t)
    if tt is int or tt is Atom:
        return t
    if t._hash:  # type: ignore[union-attr]
        return t
    if id(t) in active:
        return on_cycle(t)
    if tt is Cons:
        heads: list[Term] = []
        cells: list[int] = []
        x: Term = t
        try:
            while type(x) is Cons and not x._hash and id(x) not in active:
                active.add(id(x))
                cells.append(id(x))
                heads.append(_rebuild(x.head, leaf, on_cycle, active))
                x = deref(x.tail)
            if type(x) is not Cons:
                out = _rebuild(x, leaf, on_cycle, active)
            else:
                out = x if x._hash else on_cycle(x)
        finally:
            active.difference_update(cells)
        for h in reversed(heads):
            out = Cons(h, out)
        return out
    active.add(id(t))
    try:
        if tt is Struct:
            return Struct(t.name, tuple([_rebuild(a, leaf, on_cycle, active) for a in t.args]))  # type: ignore[union-attr]
        return Array(tuple([_rebuild(a, leaf, on_cycle, active) for a in t.elems]))  # type: ignore[union-attr]
    finally:
        active.discard(id(t))


def _keep_node(t: Term) -> Term:
    return t


def _reject_cycle(t: Term) -> Term:
    raise TermTypeError("cyclic term", t)


def resolve(t: Term) -> Term:
    """Fully dereferenced copy; unbound variables are kept as they are.

    A cyclic term resolves to a finite prefix whose back edge points at the original node.
    """
    return _rebuild(t, lambda v: v, _keep_node, set())


def copy_term(t: Term, mapping: dict[int, Var] | None = None) -> Term:
    """Copy with every unbound variable replaced by a fresh one (consistently)."""
    fresh: dict[int, Var] = {} if mapping is None else mapping

    def leaf(v: Var) -> Var:
        nv = fresh.get(v.serial)
        if nv is None:
            nv = fresh[v.serial] = Var()
        return nv

    return _rebuild(t, leaf, _reject_cycle, set())


VARIANT_FUNCTOR = "$VAR"


def variant_abstract(t: Term, numbering: dict[int, int] | None = None) -> Term:
    """Replace unbound variables by ``'$VAR'(i)`` numbered in first-occurrence order."""
    nums: dict[int, int] = {} if numbering is None else numbering

    def leaf(v: Var) -> Term:
        n = nums.get(v.serial)
        if n is None:
            n = nums[v.serial] = len(nums)
        return Struct(VARIANT_FUNCTOR, (n,))

    return _rebuild(t, leaf, _reject_cycle, set())


def variant_instantiate(t: Term, fresh: dict[int, Var] | None = None) -> Term:
    """Inverse of :func:`variant_abstract`: ``'$VAR'(i)`` becomes a fresh variable."""
    fresh = {} if fresh is None else fresh
    t = deref(t)
    tt = type(t)
    if tt is int or tt is Atom or tt is Var:
        return t
    if tt is Struct:
        if t.name == VARIANT_FUNCTOR and len(t.args) == 1 and type(t.args[0]) is int:  # type: ignore[union-attr]
            n = t.args[0]  # type: ignore[union-attr]
            v = fresh.get(n)  # type: ignore[arg-type]
            if v is None:
                v = fresh[n] = Var()  # type: ignore[index]
            return v
        return Struct(t.name, tuple(variant_instantiate(a, fresh) for a in t.args))  # type: ignore[union-attr]
    if tt is Cons:
        heads: list[Term] = []
        x: Term = t
        while type(x) is Cons:
            heads.append(variant_instantiate(x.head, fresh))
            x = deref(x.tail)
        out = variant_instantiate(x, fresh)
        for h in reversed(heads):
            out = Cons(h, out)
        return out
    return Array(tuple(variant_instantiate(a, fresh) for a in t.elems))  # type: ignore[union-attr]


# ---------------------------------------------------------------------------
# Formatting
# ---------------------------------------------------------------------------

_INFIX = {
    "+", "-", "*", "/", "//", "**", "=", "!=", "==", "!==", "<", ">", "=<", ">=",
    "#=", "#!=", "#<", "#>", "#=<", "#>=", "#/\\", "#\\/", "#^", "#=>", "#<=>",
    "..", "::", "div", "mod", "rem", "++", ";", "->", ":=",
}


def format_atom(name: str) -> str:
    if name == "[]" or name == "{}":
        return name
    if name and name[0].islower() and all(c.isalnum() or c == "_" for c in name):
        return name
    if name and all(c in "+-*/\\^<>=~:.?@#&$!" for c in name):
        return name
    escaped = name.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


CYCLE_MARK = "..."


def format_term(t: Term) -> str:
    """Text of ``t``; a back edge of a cyclic term prints as ``...``."""
    parts: list[str] = []
    _format(t, parts, set())
    return "".join(parts)


def _format(t: Term, out: list[str], active: set[int]) -> None:
    t = deref(t)
    tt = type(t)
    if tt is int:
        out.append(str(t))
    elif tt is Var:
        out.append(t.name if t.name and "#" not in t.name else f"_{t.serial}")  # type: ignore[union-attr]
    elif tt is Atom:
        out.append(format_atom(t.name))  # type: ignore[union-attr]
    elif id(t) in active:
        out.append(CYCLE_MARK)
    elif tt is Cons:
        out.append("[")
        x: Term = t
        cells: list[int] = []
        try:
            while type(x) is Cons and id(x) not in active:
                if cells:
                    out.append(",")
                active.add(id(x))
                cells.append(id(x))
                _format(x.head, out, active)
                x = deref(x.tail)
            if x is not NIL:
                out.append("|")
                _format(x, out, active)
        finally:
            active.difference_update(cells)
        out.append("]")
    else:
        active.add(id(t))
        try:
            _format_compound(t, out, active)
        finally:
            active.discard(id(t))


def _format_compound(t: Term, out: list[str], active: set[int]) -> None:
    if type(t) is Array:
        out.append("{")
        for i, e in enumerate(t.elems):  # type: ignore[union-attr]
            if i:
                out.append(",")
            _format(e, out, active)
        out.append("}")
        return
    name = t.name  # type: ignore[union-attr]
    args = t.args  # type: ignore[union-attr]
    if name == "," and len(args) == 2:
        out.append("(")
        _format(args[0], out, active)
        out.append(",")
        _format(args[1], out, active)
        out.append(")")
        return
    if len(args) == 2 and name in _INFIX:
        _format_operand(args[0], out, active)
        out.append(name if name in (",", "..") else f" {name} " if name.isalpha() else name)
        _format_operand(args[1], out, active)
        return
    if len(args) == 1 and name == "-":
        out.append("-")
        _format_operand(args[0], out, active)
        return
    out.append(format_atom(name))
    out.append("(")
    for i, a in enumerate(args):
        if i:
            out.append(",")
        _format(a, out, active)
    out.append(")")


def _format_operand(t: Term, out: list[str], active: set[int]) -> None:
    t = deref(t)
    if type(t) is Struct and (t.name in _INFIX and len(t.args) == 2) and id(t) not in active:
        out.append("(")
        _format(t, out, active)
        out.append(")")
    elif type(t) is int and t < 0:
        out.append(f"({t})")
    else:
        _format(t, out, active)


# ---------------------------------------------------------------------------
# Conversion helpers
# ---------------------------------------------------------------------------


def to_python(t: Term) -> Any:
    """Convert to plain Python: ints, atom names, lists and tuples (arrays).

    Structures, unbound variables and cyclic lists or arrays are returned as resolved terms.
    """
    return _to_python(t, set())


def _to_python(t: Term, active: set[int]) -> Any:
    t = deref(t)
    tt = type(t)
    if tt is int:
        return t
    if t is NIL:
        return []
    if tt is Atom:
        return t.name  # type: ignore[union-attr]
    if (tt is Cons or tt is Array) and id(t) in active:
        return resolve(t)
    if tt is Cons:
        items = []
        cells: list[int] = []
        x: Term = t
        try:
            while type(x) is Cons and id(x) not in active:
                active.add(id(x))
                cells.append(id(x))
                items.append(_to_python(x.head, active))
                x = deref(x.tail)
        finally:
            active.difference_update(cells)
        if x is not NIL:
            return resolve(t)
        return items
    if tt is Array:
        active.add(id(t))
        try:
            return tuple([_to_python(e, active) for e in t.elems])  # type: ignore[union-attr]
        finally:
            active.discard(id(t))
    return resolve(t)


def from_python(value: Any) -> Term:
    if isinstance(value, bool):
        raise TermTypeError("booleans are not terms", None)
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        return Atom(value)
    if isinstance(value, list):
        out: Term = NIL
        for item in reversed(value):
            out = Cons(from_python(item), out)
        return out
    if isinstance(value, tuple):
        return Array(tuple(from_python(v) for v in value))
    if isinstance(value, (Var, Atom, Compound)):
        return value
    raise TermTypeError(f"cannot convert {value!r} to a term", None)
