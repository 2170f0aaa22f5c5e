"""Building, one-way matching and unification of terms.

``build`` and ``match`` operate on compiled templates (see
:mod:`tabulog.lang.compiler`); anything that is not a template is a runtime
term and is used as it is.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

from tabulog.lang.compiler import ANON, Slot, TArray, TAs, TCons, TStruct
from tabulog.terms.ops import deref, term_equal
from tabulog.terms.types import Array, Atom, Cons, Struct, Term, Var

if TYPE_CHECKING:
    from tabulog.engine.machine import Engine


def build(t: Any, env: list[Any]) -> Term:
    tt = type(t)
    if tt is Slot:
        v = env[t.index]
        if v is None:
            v = env[t.index] = Var()
        return v  # type: ignore[no-any-return]
    if tt is TStruct:
        return Struct(t.name, tuple([build(a, env) for a in t.args]))
    if tt is TCons:
        heads = []
        x = t
        while type(x) is TCons:
            heads.append(build(x.head, env))
            x = x.tail
        out = build(x, env)
        for h in reversed(heads):
            out = Cons(h, out)
        return out
    if tt is TArray:
        return Array(tuple([build(e, env) for e in t.elems]))
    if t is ANON:
        return Var()
    return t  # type: ignore[no-any-return]


def match(pattern: Any, value: Term, env: list[Any]) -> bool:
    """One-way matching: binds pattern slots only, never a variable of ``value``.

    A non-variable pattern meeting an unbound variable fails. A slot seen
    before requires an identical (``==``) value.
    """
    stack: list[tuple[Any, Term]] = [(pattern, value)]
    while stack:
        p, v = stack.pop()
        tp = type(p)
        if tp is Slot:
            cur = env[p.index]
            if cur is None:
                env[p.index] = v
            elif not term_equal(cur, v):
                return False
            continue
        if p is ANON:
            continue
        v = deref(v)
        tv = type(v)
        if tp is int:
            if tv is not int or v != p:
                return False
        elif tp is Atom:
            if v is not p:
                return False
        elif tp is TCons:
            if tv is not Cons:
                return False
            stack.append((p.tail, v.tail))  # type: ignore[union-attr]
            stack.append((p.head, v.head))  # type: ignore[union-attr]
        elif tp is TStruct:
            if tv is not Struct or v.name != p.name or len(v.args) != len(p.args):  # type: ignore[union-attr]
                return False
            stack.extend(zip(p.args, v.args))  # type: ignore[union-attr]
        elif tp is TArray:
            if tv is not Array or len(v.elems) != len(p.elems):  # type: ignore[union-attr]
                return False
            stack.extend(zip(p.elems, v.elems))  # type: ignore[union-attr]
        elif tp is TAs:
            stack.append((p.slot, v))
            stack.append((p.pattern, v))
        elif tv is Var or not term_equal(p, v):
            return False
    return True


def unify(m: Engine, a: Term, b: Term) -> bool:
    """Syntactic unification without occurs check; bindings go on ``m``'s trail."""
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x = deref(x)
        y = deref(y)
        if x is y:
            continue
        tx = type(x)
        ty = type(y)
        if tx is Var:
            if ty is Var and x.attr is not None and y.attr is None:  # type: ignore[union-attr]
                if not m.bind(y, x):  # type: ignore[arg-type]
                    return False
            elif not m.bind(x, y):  # type: ignore[arg-type]
                return False
            continue
        if ty is Var:
            if not m.bind(y, x):  # type: ignore[arg-type]
                return False
            continue
        if tx is not ty:
            return False
        if tx is int:
            if x != y:
                return False
            continue
        if tx is Atom:
            return False
        hx = x._hash  # type: ignore[union-attr]
        hy = y._hash  # type: ignore[union-attr]
        if hx and hy and hx != hy:
            return False
        if tx is Cons:
            stack.append((x.tail, y.tail))  # type: ignore[union-attr]
            stack.append((x.head, y.head))  # type: ignore[union-attr]
        elif tx is Struct:
            if x.name != y.name or len(x.args) != len(y.args):  # type: ignore[union-attr]
                return False
            stack.extend(zip(x.args, y.args))  # type: ignore[union-attr]
        else:
            if len(x.elems) != len(y.elems):  # type: ignore[union-attr]
                return False
            stack.extend(zip(x.elems, y.elems))  # type: ignore[union-attr]
    return True
