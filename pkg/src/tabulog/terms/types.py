"""Runtime term representation.

Integers are plain Python ``int`` values. Atoms are interned by name, so atom
equality is identity. Compound nodes carry a ``_hash`` slot which is filled in
when the node is hash-consed by a :class:`~tabulog.terms.store.TermStore`.
"""

from __future__ import annotations

import itertools
from typing import Any, ClassVar, Union

_serials = itertools.count(1)


class Var:
    """A logic variable. ``ref`` is ``None`` while unbound."""

    __slots__ = ("ref", "serial", "name", "attr")

    def __init__(self, name: str | None = None) -> None:
        self.ref: Term | None = None
        self.serial = next(_serials)
        self.name = name
        # Constraint attribute (a model variable id) or None.
        self.attr: Any = None

    def __repr__(self) -> str:
        if self.ref is not None:
            return repr(self.ref)
        return self.name or f"_{self.serial}"


class Atom:
    __slots__ = ("name", "_hash")
    _table: ClassVar[dict[str, Atom]] = {}

    def __new__(cls, name: str) -> Atom:
        found = cls._table.get(name)
        if found is None:
            found = object.__new__(cls)
            found.name = name
            found._hash = 0
            cls._table[name] = found
        return found

    @classmethod
    def of(cls, name: str) -> Atom:
        return cls(name)

    def __repr__(self) -> str:
        return self.name

    def __reduce__(self) -> tuple[Any, ...]:
        return (Atom, (self.name,))


class Compound:
    """Common base of the compound node types."""

    __slots__ = ("_hash",)

    def __eq__(self, other: object) -> bool:
        from tabulog.terms.ops import term_equal

        if self is other:
            return True
        if not isinstance(other, Compound):
            return False
        return term_equal(self, other)

    def __hash__(self) -> int:
        if self._hash:
            return self._hash
        from tabulog.terms.ops import structural_hash

        return structural_hash(self)

    def __repr__(self) -> str:
        from tabulog.terms.ops import format_term

        return format_term(self)


class Struct(Compound):
    __slots__ = ("name", "args")

    def __init__(self, name: str, args: tuple[Term, ...]) -> None:
        self.name = name
        self.args = args
        self._hash = 0

    @property
    def arity(self) -> int:
        return len(self.args)


class Cons(Compound):
    __slots__ = ("head", "tail")

    def __init__(self, head: Term, tail: Term) -> None:
        self.head = head
        self.tail = tail
        self._hash = 0


class Array(Compound):
    """A fixed-size 1-indexed array, written ``{a, b, c}``."""

    __slots__ = ("elems",)

    def __init__(self, elems: tuple[Term, ...]) -> None:
        self.elems = elems
        self._hash = 0


Term = Union[Var, Atom, int, Struct, Cons, Array]

NIL = Atom("[]")
TRUE = Atom("true")
FALSE = Atom("false")
EMPTY_TUPLE: tuple[Term, ...] = ()


def make_list(items: Any, tail: Term = NIL) -> Term:
    out = tail
    for item in reversed(list(items)):
        out = Cons(item, out)
    return out


def make_string(text: str) -> Term:
    """A double-quoted string is a list of single-character atoms."""
    return make_list(Atom(ch) for ch in text)


def struct(name: str, *args: Term) -> Term:
    if not args:
        return Atom(name)
    return Struct(name, tuple(args))
