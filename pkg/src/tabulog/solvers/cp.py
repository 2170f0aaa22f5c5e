"""Propagation-based finite-domain store and search.

The store keeps one :class:`Domain` per variable id. Every change (domain
narrowing, new variables, new propagators) pushes an undo callable on the
trail, so the store follows the engine's backtracking when it shares the
engine's trail.

Filtering levels:

- linear ``<=`` and ``=``: bounds consistency; two-variable ``=`` is
  domain consistent,
- linear ``!=``: value removal once one variable is left,
- non-linear functions and Boolean connectives: support scan while the
  product of argument domain sizes stays under ``cp_support_limit``,
- ``element``: support scan over the index domain,
- ``table_in``: forward checking over the live tuples,
- ``all_different``: pairwise ``!=``.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import deque
from collections.abc import Callable, Iterator
from functools import partial
from typing import Any

from tabulog.config import Settings, get_settings
from tabulog.errors import UnsupportedConstraint
from tabulog.solvers.domain import BOOLEAN, Domain, union
from tabulog.solvers.model import (
    CONNECTIVE_TABLE,
    OPERATIONS,
    AllDifferent,
    Conn,
    Constraint,
    ConstraintModel,
    Element,
    Expr,
    Op,
    Ref,
    Rel,
    Table,
    expr_refs,
    format_expr,
    normalize_relation,
)

logger = logging.getLogger(__name__)

Terms = tuple[tuple[int, int], ...]


def _floor_div(a: int, b: int) -> int:
    return a // b


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


# ---------------------------------------------------------------------------
# Propagators
# ---------------------------------------------------------------------------


class Propagator:
    vars: tuple[int, ...] = ()

    def propagate(self, s: CpStore) -> bool:
        raise NotImplementedError


def linear_bounds(s: CpStore, terms: Terms, c: int) -> tuple[int, int]:
    lo = hi = c
    for v, a in terms:
        d = s.doms[v]
        if a > 0:
            lo += a * d.min
            hi += a * d.max
        else:
            lo += a * d.max
            hi += a * d.min
    return lo, hi


def _filter_le(s: CpStore, terms: Terms, c: int) -> bool:
    """Bounds filtering for ``sum(a*x) + c <= 0``."""
    lo, _ = linear_bounds(s, terms, c)
    if lo > 0:
        return False
    for v, a in terms:
        d = s.doms[v]
        own = a * d.min if a > 0 else a * d.max
        slack = own - lo  # sum of the others' minima plus c, negated
        if a > 0:
            new = s.doms[v].restrict(hi=_floor_div(slack, a))
        else:
            new = s.doms[v].restrict(lo=_ceil_div(slack, a))
        if not s.set_dom(v, new):
            return False
        lo, _ = linear_bounds(s, terms, c)
    return True


def _filter_eq_pair(s: CpStore, terms: Terms, c: int) -> bool:
    """Domain-consistent ``a*x + b*y + c = 0``."""
    (x, a), (y, b) = terms
    dx, dy = s.doms[x], s.doms[y]
    keep_x = [v for v in dx if (-(a * v + c)) % b == 0 and (-(a * v + c)) // b in dy]
    if not s.set_dom(x, dx.keep(keep_x)):
        return False
    dx = s.doms[x]
    keep_y = [w for w in dy if (-(b * w + c)) % a == 0 and (-(b * w + c)) // a in dx]
    return s.set_dom(y, dy.keep(keep_y))


def filter_linear(s: CpStore, terms: Terms, c: int, op: str) -> bool:
    if op == "<=":
        return _filter_le(s, terms, c)
    if op == "=":
        if len(terms) == 2 and s.doms[terms[0][0]].size * s.doms[terms[1][0]].size <= s.support_limit:
            return _filter_eq_pair(s, terms, c)
        neg = tuple((v, -a) for v, a in terms)
        while True:
            before = [s.doms[v].size for v, _ in terms]
            if not (_filter_le(s, terms, c) and _filter_le(s, neg, -c)):
                return False
            if before == [s.doms[v].size for v, _ in terms]:
                return True
    # "!="
    rest = c
    open_terms = []
    for v, a in terms:
        d = s.doms[v]
        if d.fixed:
            rest += a * d.min
        else:
            open_terms.append((v, a))
    if not open_terms:
        return rest != 0
    if len(open_terms) == 1:
        v, a = open_terms[0]
        if rest % a == 0:
            return s.set_dom(v, s.doms[v].remove(-rest // a))
    return True


def negate_linear(terms: Terms, c: int, op: str) -> tuple[Terms, int, str]:
    if op == "=":
        return terms, c, "!="
    if op == "!=":
        return terms, c, "="
    return tuple((v, -a) for v, a in terms), -c + 1, "<="


def entailment(s: CpStore, terms: Terms, c: int, op: str) -> bool | None:
    lo, hi = linear_bounds(s, terms, c)
    if op == "<=":
        if hi <= 0:
            return True
        if lo > 0:
            return False
        return None
    eq: bool | None = None
    if lo == hi == 0:
        eq = True
    elif lo > 0 or hi < 0:
        eq = False
    elif all(s.doms[v].fixed for v, _ in terms):
        eq = lo == 0
    if eq is None:
        return None
    return eq if op == "=" else not eq


class LinearProp(Propagator):
    def __init__(self, terms: Terms, c: int, op: str) -> None:
        self.terms = terms
        self.c = c
        self.op = op
        self.vars = tuple(v for v, _ in terms)

    def propagate(self, s: CpStore) -> bool:
        return filter_linear(s, self.terms, self.c, self.op)


class ReifProp(Propagator):
    """``b <=> (sum + c OP 0)`` with ``b`` a 0/1 variable."""

    def __init__(self, b: int, terms: Terms, c: int, op: str) -> None:
        self.b = b
        self.terms = terms
        self.c = c
        self.op = op
        self.vars = (b, *(v for v, _ in terms))

    def propagate(self, s: CpStore) -> bool:
        db = s.doms[self.b]
        if db.fixed:
            if db.min == 1:
                return filter_linear(s, self.terms, self.c, self.op)
            return filter_linear(s, *negate_linear(self.terms, self.c, self.op))
        status = entailment(s, self.terms, self.c, self.op)
        if status is None:
            return True
        return s.set_dom(self.b, db.intersect(Domain.value(1 if status else 0)))


class FuncProp(Propagator):
    """``z = fn(args)``."""

    def __init__(
        self,
        z: int,
        fn: Callable[..., int],
        args: tuple[int, ...],
        bounds: Callable[[list[Domain]], tuple[int, int]] | None = None,
    ) -> None:
        self.z = z
        self.fn = fn
        self.args = args
        self.bounds = bounds
        self.vars = (z, *args)

    def propagate(self, s: CpStore) -> bool:
        doms = [s.doms[v] for v in self.args]
        dz = s.doms[self.z]
        if math.prod(d.size for d in doms) <= s.support_limit:
            supported: list[set[int]] = [set() for _ in doms]
            results: set[int] = set()
            for combo in itertools.product(*doms):
                try:
                    r = self.fn(*combo)
                except ZeroDivisionError:
                    continue
                if r in dz:
                    results.add(r)
                    for i, v in enumerate(combo):
                        supported[i].add(v)
            if not s.set_dom(self.z, dz.keep(results)):
                return False
            for v, vals in zip(self.args, supported):
                if not s.set_dom(v, s.doms[v].keep(vals)):
                    return False
            return True
        if all(d.fixed for d in doms):
            try:
                r = self.fn(*(d.min for d in doms))
            except ZeroDivisionError:
                return False
            return s.set_dom(self.z, dz.intersect(Domain.value(r)))
        if self.bounds is not None:
            lo, hi = self.bounds(doms)
            return s.set_dom(self.z, dz.restrict(lo, hi))
        return True


class ElementProp(Propagator):
    def __init__(self, index: int, items: tuple[int, ...], value: int) -> None:
        self.index = index
        self.items = items
        self.value = value
        self.vars = (index, value, *items)

    def propagate(self, s: CpStore) -> bool:
        dv = s.doms[self.value]
        di = s.doms[self.index].restrict(1, len(self.items))
        keep = [i for i in di if not s.doms[self.items[i - 1]].intersect(dv).empty]
        if not s.set_dom(self.index, di.keep(keep)):
            return False
        reach = union([s.doms[self.items[i - 1]] for i in keep])
        if not s.set_dom(self.value, dv.intersect(reach)):
            return False
        di = s.doms[self.index]
        if di.fixed:
            item = self.items[di.min - 1]
            if not s.set_dom(item, s.doms[item].intersect(s.doms[self.value])):
                return False
            return s.set_dom(self.value, s.doms[self.value].intersect(s.doms[item]))
        return True


class TableProp(Propagator):
    def __init__(self, args: tuple[int, ...], tuples: tuple[tuple[int, ...], ...], negated: bool) -> None:
        self.args = args
        self.tuples = tuples
        self.rows = set(tuples)
        self.negated = negated
        self.vars = args

    def propagate(self, s: CpStore) -> bool:
        doms = [s.doms[v] for v in self.args]
        if not self.negated:
            live = [t for t in self.tuples if all(x in d for x, d in zip(t, doms))]
            if not live:
                return False
            for k, v in enumerate(self.args):
                if not s.set_dom(v, doms[k].keep(t[k] for t in live)):
                    return False
            return True
        open_pos = [k for k, d in enumerate(doms) if not d.fixed]
        if not open_pos:
            return tuple(d.min for d in doms) not in self.rows
        if len(open_pos) == 1:
            k = open_pos[0]
            row = [d.min for d in doms]
            for t in self.tuples:
                row[k] = t[k]
                if tuple(row) == t:
                    if not s.set_dom(self.args[k], s.doms[self.args[k]].remove(t[k])):
                        return False
        return True


# ---------------------------------------------------------------------------
# Interval bounds of non-linear functions
# ---------------------------------------------------------------------------


def _mul_bounds(doms: list[Domain]) -> tuple[int, int]:
    a, b = doms
    corners = [x * y for x in (a.min, a.max) for y in (b.min, b.max)]
    return min(corners), max(corners)


def _abs_bounds(doms: list[Domain]) -> tuple[int, int]:
    (a,) = doms
    top = max(abs(a.min), abs(a.max))
    if a.min >= 0:
        return a.min, top
    if a.max <= 0:
        return -a.max, top
    return 0, top


def _min_bounds(doms: list[Domain]) -> tuple[int, int]:
    a, b = doms
    return min(a.min, b.min), min(a.max, b.max)


def _max_bounds(doms: list[Domain]) -> tuple[int, int]:
    a, b = doms
    return max(a.min, b.min), max(a.max, b.max)


def _div_bounds(doms: list[Domain]) -> tuple[int, int]:
    a, _ = doms
    top = max(abs(a.min), abs(a.max))
    return -top, top


def _mod_bounds(doms: list[Domain]) -> tuple[int, int]:
    _, b = doms
    top = max(abs(b.min), abs(b.max), 1) - 1
    return -top, top


BOUNDS: dict[str, Callable[[list[Domain]], tuple[int, int]]] = {
    "*": _mul_bounds,
    "abs": _abs_bounds,
    "min": _min_bounds,
    "max": _max_bounds,
    "div": _div_bounds,
    "mod": _mod_bounds,
}


def _connective(op: str) -> Callable[..., int]:
    table = CONNECTIVE_TABLE[op]

    def fn(*xs: int) -> int:
        return int(table(*(x == 1 for x in xs)))

    return fn


# ---------------------------------------------------------------------------
# The store
# ---------------------------------------------------------------------------


class CpStore:
    def __init__(
        self,
        settings: Settings | None = None,
        trail: list[Any] | None = None,
        undo: Callable[[int], None] | None = None,
    ) -> None:
        self.settings = settings or get_settings()
        self.support_limit = self.settings.cp_support_limit
        self.doms: list[Domain] = []
        self.watch: list[list[Propagator]] = []
        self.props: list[Propagator] = []
        self.constraints: list[Constraint] = []
        self.names: dict[int, str] = {}
        self.trail: list[Any] = [] if trail is None else trail
        self._undo = undo
        self.queue: deque[Propagator] = deque()
        self.queued: set[int] = set()
        self.newly_fixed: list[int] = []
        self.propagations = 0
        self.choices = 0
        self.failures = 0

    # -- trail -----------------------------------------------------------------

    def mark(self) -> int:
        return len(self.trail)

    def undo(self, mark: int) -> None:
        if self._undo is not None:
            self._undo(mark)
            return
        while len(self.trail) > mark:
            self.trail.pop()()

    def _restore(self, vid: int, old: Domain) -> None:
        self.doms[vid] = old

    def _drop_var(self) -> None:
        self.doms.pop()
        self.watch.pop()

    def _drop_prop(self, p: Propagator) -> None:
        if id(p) in self.queued:
            self.queued.discard(id(p))
            self.queue.remove(p)
        self.props.pop()
        for v in set(p.vars):
            self.watch[v].pop()

    # -- variables and domains ---------------------------------------------------

    def new_var(self, domain: Domain, name: str | None = None) -> int:
        vid = len(self.doms)
        self.doms.append(domain)
        self.watch.append([])
        self.trail.append(self._drop_var)
        if name:
            self.names[vid] = name
        return vid

    def dom(self, vid: int) -> Domain:
        return self.doms[vid]

    def set_dom(self, vid: int, new: Domain) -> bool:
        old = self.doms[vid]
        if new.size == old.size:
            return True
        if new.empty:
            self.failures += 1
            return False
        self.doms[vid] = new
        self.trail.append(partial(self._restore, vid, old))
        for p in self.watch[vid]:
            self._enqueue(p)
        if new.fixed:
            self.newly_fixed.append(vid)
        return True

    def narrow(self, vid: int, domain: Domain) -> bool:
        return self.set_dom(vid, self.doms[vid].intersect(domain))

    def assign(self, vid: int, value: int) -> bool:
        if value not in self.doms[vid]:
            self.failures += 1
            return False
        return self.set_dom(vid, Domain.value(value)) and self.propagate()

    def is_fixed(self, vid: int) -> bool:
        return self.doms[vid].fixed

    def value(self, vid: int) -> int:
        return self.doms[vid].min

    # -- propagation -------------------------------------------------------------

    def _enqueue(self, p: Propagator) -> None:
        if id(p) not in self.queued:
            self.queued.add(id(p))
            self.queue.append(p)

    def add(self, p: Propagator) -> None:
        self.props.append(p)
        for v in set(p.vars):
            self.watch[v].append(p)
        self.trail.append(partial(self._drop_prop, p))
        self._enqueue(p)

    def propagate(self) -> bool:
        queue = self.queue
        while queue:
            p = queue.popleft()
            self.queued.discard(id(p))
            self.propagations += 1
            if not p.propagate(self):
                queue.clear()
                self.queued.clear()
                return False
        return True

    # -- compiling model constraints into propagators ----------------------------

    def linear(self, e: Expr) -> tuple[dict[int, int], int]:
        """Linear form of ``e``; non-linear subterms get auxiliary variables."""
        if isinstance(e, int):
            return {}, e
        if isinstance(e, Ref):
            return {e.id: 1}, 0
        name, args = e.name, e.args
        if name in ("+", "-"):
            a = self.linear(args[0])
            b = self.linear(args[1])
            sign = 1 if name == "+" else -1
            coefs = dict(a[0])
            for v, k in b[0].items():
                coefs[v] = coefs.get(v, 0) + sign * k
            return {v: k for v, k in coefs.items() if k}, a[1] + sign * b[1]
        if name == "neg":
            a = self.linear(args[0])
            return {v: -k for v, k in a[0].items()}, -a[1]
        if name == "*":
            a = self.linear(args[0])
            b = self.linear(args[1])
            if not a[0]:
                a, b = b, a
            if not b[0]:
                return {v: c * b[1] for v, c in a[0].items() if c * b[1]}, a[1] * b[1]
            ins = (self.form_var(*a), self.form_var(*b))
        elif name not in OPERATIONS:
            raise UnsupportedConstraint("cp", f"function {name}/{len(args)}")
        else:
            ins = tuple(self.expr_var(a) for a in args)
        bounds = BOUNDS.get(name)
        lo, hi = bounds([self.doms[v] for v in ins]) if bounds else (-self.settings.default_int_bound, self.settings.default_int_bound)
        z = self.new_var(Domain.interval(lo, hi))
        self.add(FuncProp(z, OPERATIONS[name], ins, bounds))
        return {z: 1}, 0

    def expr_var(self, e: Expr) -> int:
        """A variable equal to ``e``."""
        if isinstance(e, Ref):
            return e.id
        if isinstance(e, int):
            return self.new_var(Domain.value(e))
        return self.form_var(*self.linear(e))

    def form_var(self, coefs: dict[int, int], c: int) -> int:
        if not coefs:
            return self.new_var(Domain.value(c))
        if c == 0 and len(coefs) == 1 and next(iter(coefs.values())) == 1:
            return next(iter(coefs))
        terms = tuple(coefs.items())
        lo, hi = linear_bounds(self, terms, c)
        z = self.new_var(Domain.interval(lo, hi))
        self.add(LinearProp((*terms, (z, -1)), c, "="))
        return z

    def relation(self, rel: Rel) -> tuple[Terms, int, str]:
        coefs, c, op = normalize_relation(self.linear(rel.lhs), self.linear(rel.rhs), rel.op)
        return tuple(coefs.items()), c, op

    def reify(self, f: Any) -> int:
        """A 0/1 variable equivalent to formula ``f``."""
        if isinstance(f, Rel):
            b = self.new_var(BOOLEAN)
            terms, c, op = self.relation(f)
            self.add(ReifProp(b, terms, c, op))
            return b
        if isinstance(f, Conn):
            ins = tuple(self.reify(a) for a in f.args)
            r = self.new_var(BOOLEAN)
            self.add(FuncProp(r, _connective(f.op), ins))
            return r
        if isinstance(f, (int, Ref, Op)):
            v = self.expr_var(f)
            if not self.narrow(v, BOOLEAN):
                self.add(_Failed())
            return v
        raise UnsupportedConstraint("cp", f"{format_expr(f)} inside a Boolean connective")

    def _record(self, c: Constraint) -> None:
        self.constraints.append(c)
        self.trail.append(self.constraints.pop)

    def post(self, c: Constraint, propagate: bool | None = None) -> bool:
        """Add a model constraint; returns False if it is already inconsistent."""
        self._record(c)
        if not self._compile(c):
            self.queue.clear()
            self.queued.clear()
            return False
        eager = self.settings.eager_propagation if propagate is None else propagate
        return self.propagate() if eager else True

    def _compile(self, c: Constraint) -> bool:
        if isinstance(c, Rel):
            terms, k, op = self.relation(c)
            if not terms:
                return {"=": k == 0, "!=": k != 0, "<=": k <= 0}[op]
            self.add(LinearProp(terms, k, op))
            return True
        if isinstance(c, Conn):
            if c.op == "#/\\":
                return self._compile(c.args[0]) and self._compile(c.args[1])
            return self.narrow(self.reify(c), Domain.value(1))
        if isinstance(c, AllDifferent):
            vids = [self.expr_var(a) for a in c.args]
            for x, y in itertools.combinations(vids, 2):
                self.add(LinearProp(((x, 1), (y, -1)), 0, "!="))
            return True
        if isinstance(c, Element):
            index = self.expr_var(c.index)
            items = tuple(self.expr_var(a) for a in c.items)
            self.add(ElementProp(index, items, self.expr_var(c.value)))
            return True
        if isinstance(c, Table):
            self.add(TableProp(tuple(self.expr_var(a) for a in c.args), c.tuples, c.negated))
            return True
        return self.narrow(self.reify(c), Domain.value(1))

    # -- snapshots and stats -----------------------------------------------------

    def model(self, vids: list[int] | None = None) -> ConstraintModel:
        """The posted constraints over the current domains of the variables they mention."""
        used: set[int] = set(vids or ())
        for c in self.constraints:
            expr_refs(c, used)
        return ConstraintModel(
            domains={v: self.doms[v] for v in sorted(used)},
            constraints=list(self.constraints),
            names={v: n for v, n in self.names.items() if v in used},
        )

    def stats(self) -> dict[str, int]:
        return {
            "cp_vars": len(self.doms),
            "cp_propagators": len(self.props),
            "cp_propagations": self.propagations,
            "cp_choices": self.choices,
            "cp_failures": self.failures,
        }


class _Failed(Propagator):
    def propagate(self, s: CpStore) -> bool:
        return False


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------


def select_var(s: CpStore, vids: list[int], strategy: str) -> int | None:
    if strategy == "ff":
        best = None
        for v in vids:
            d = s.doms[v]
            if not d.fixed and (best is None or (d.size, v) < (s.doms[best].size, best)):
                best = v
        return best
    for v in vids:
        if not s.doms[v].fixed:
            return v
    return None


def label(
    s: CpStore,
    vids: list[int],
    strategy: str = "default",
    assign: Callable[[int, int], bool] | None = None,
    node: Callable[[], bool] | None = None,
) -> Iterator[None]:
    """Depth-first labeling, values ascending. Yields with the assignment in place.

    ``node`` runs on entry to every search node (branch and bound uses it to
    re-apply the current bound); returning False prunes the node.
    """
    assign = assign or s.assign

    def search() -> Iterator[None]:
        if node is not None and not node():
            return
        vid = select_var(s, vids, strategy)
        if vid is None:
            yield
            return
        s.choices += 1
        for value in s.doms[vid]:
            mark = s.mark()
            if assign(vid, value):
                yield from search()
            s.undo(mark)

    yield from search()


def optimize(
    s: CpStore,
    vids: list[int],
    objective: int,
    sense: str,
    strategy: str = "default",
    assign: Callable[[int, int], bool] | None = None,
) -> Iterator[None]:
    """Branch and bound on ``objective``; yields once, with the optimal assignment in place."""
    assign = assign or s.assign
    best: int | None = None
    best_values: list[tuple[int, int]] = []
    order = [*vids, objective] if objective not in vids else list(vids)

    def bound() -> bool:
        if best is None:
            return True
        d = s.doms[objective]
        tightened = d.restrict(hi=best - 1) if sense == "min" else d.restrict(lo=best + 1)
        return s.set_dom(objective, tightened) and s.propagate()

    for _ in label(s, order, strategy, assign, bound):
        best = s.value(objective)
        best_values = [(v, s.value(v)) for v in order]
        logger.debug("improved objective to %d", best)
    if best is None:
        return
    mark = s.mark()
    if all(assign(v, val) for v, val in best_values):
        yield
    s.undo(mark)
