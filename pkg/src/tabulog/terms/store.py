"""Hash-consing store for ground compound terms.

A canonical node is its own handle: two structurally equal ground terms
intern to the same Python object, and the node's ``_hash`` slot holds the hash
computed at intern time. Integers and atoms are already canonical and are
never counted as store nodes.
"""

from __future__ import annotations

import logging
from typing import Any

from tabulog.errors import ContractError, TermTypeError
from tabulog.terms.ops import (
    TAG_ARRAY,
    TAG_CONS,
    TAG_STRUCT,
    children,
    combine,
    deref,
    hash_atom,
    hash_int,
    hash_name,
    is_ground,
)
from tabulog.terms.types import NIL, Array, Atom, Cons, Struct, Term, Var

logger = logging.getLogger(__name__)

_NONGROUND = object()


class TermStore:
    def __init__(self) -> None:
        self._table: dict[tuple[Any, ...], Term] = {}
        self.intern_hits = 0
        self.intern_misses = 0
        # Nodes visited by intern(); hash_of() never moves it.
        self.traversals = 0

    @property
    def node_count(self) -> int:
        return len(self._table)

    def stats(self) -> dict[str, int]:
        return {
            "node_count": self.node_count,
            "intern_hits": self.intern_hits,
            "intern_misses": self.intern_misses,
        }

    def intern(self, t: Term) -> Term:
        """Return the canonical handle for ``t``.

        Non-ground terms are returned unchanged (their ground subterms are
        interned on the way).
        """
        t = deref(t)
        tt = type(t)
        if tt is int or tt is Var:
            return t
        if tt is Atom:
            hash_atom(t)  # type: ignore[arg-type]
            return t
        if t._hash:  # type: ignore[union-attr]
            self.intern_hits += 1
            return t

        done: dict[int, Any] = {}
        # expanded but not yet canonical: the ancestors of whatever is being expanded
        open_ids: set[int] = set()
        stack: list[tuple[Term, bool]] = [(t, False)]
        while stack:
            node, expanded = stack.pop()
            key_id = id(node)
            if key_id in done:
                continue
            if not expanded:
                self.traversals += 1
                open_ids.add(key_id)
                stack.append((node, True))
                for c in children(node):  # type: ignore[arg-type]
                    c = deref(c)
                    tc = type(c)
                    if (tc is Cons or tc is Struct or tc is Array) and not c._hash and id(c) not in done:
                        if id(c) in open_ids:
                            raise TermTypeError("cannot intern a cyclic term", t)
                        stack.append((c, False))
                continue
            open_ids.discard(key_id)
            done[key_id] = self._canonical(node, done)
        result = done[id(t)]
        return t if result is _NONGROUND else result

    def _canonical(self, node: Term, done: dict[int, Any]) -> Any:
        kids: list[Term] = []
        hashes: list[int] = []
        reuse = True
        for raw in children(node):  # type: ignore[arg-type]
            c = deref(raw)
            tc = type(c)
            if tc is Var:
                return _NONGROUND
            if tc is int:
                hashes.append(hash_int(c))  # type: ignore[arg-type]
            elif tc is Atom:
                hashes.append(hash_atom(c))  # type: ignore[arg-type]
            else:
                if not c._hash:  # type: ignore[union-attr]
                    c = done[id(c)]
                    if c is _NONGROUND:
                        return _NONGROUND
                hashes.append(c._hash)  # type: ignore[union-attr]
            if c is not raw:
                reuse = False
            kids.append(c)

        tn = type(node)
        if tn is Cons:
            key: tuple[Any, ...] = (TAG_CONS, "", kids[0], kids[1])
        elif tn is Struct:
            key = (TAG_STRUCT, node.name, *kids)  # type: ignore[union-attr]
        else:
            key = (TAG_ARRAY, "", *kids)

        found = self._table.get(key)
        if found is not None:
            self.intern_hits += 1
            return found
        self.intern_misses += 1

        if tn is Cons:
            h = combine(TAG_CONS, hash_atom(NIL), hashes)
            canon = node if reuse else Cons(kids[0], kids[1])
        elif tn is Struct:
            h = combine(TAG_STRUCT, hash_name(node.name), hashes)  # type: ignore[union-attr]
            canon = node if reuse else Struct(node.name, tuple(kids))  # type: ignore[union-attr]
        else:
            h = combine(TAG_ARRAY, 0, hashes)
            canon = node if reuse else Array(tuple(kids))
        canon._hash = h or 1  # type: ignore[union-attr]
        self._table[key] = canon
        return canon

    def hash_of(self, t: Term) -> int:
        t = deref(t)
        tt = type(t)
        if tt is int:
            return hash_int(t)  # type: ignore[arg-type]
        if tt is Atom:
            return hash_atom(t)  # type: ignore[arg-type]
        if tt is Var:
            raise ContractError("hash_of called on an unbound variable")
        h = t._hash  # type: ignore[union-attr]
        if h:
            return h
        if not is_ground(t):
            raise ContractError("hash_of called on a non-ground term")
        raise ContractError("hash_of called on a term that was never interned")

    def is_interned(self, t: Term) -> bool:
        t = deref(t)
        tt = type(t)
        return tt is int or tt is Atom or (tt is not Var and bool(t._hash))  # type: ignore[union-attr]
