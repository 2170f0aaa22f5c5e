"""MIP backend: big-M linearization, LP-format output and an exhaustive integer checker.

A reified comparison ``B <=> (E =< 0)`` over a linear expression ``E``
becomes the two rows::

    E + M1*B =< M1          (B = 0 relaxes E =< 0)
    1 - E - M2*B =< 0       (B = 1 relaxes E >= 1)

with ``M1 = max(E) + 1`` and ``M2 = 2 - min(E)``. For ``E = X - Y`` these are
``ubd(X) - lbd(Y) + 1`` and ``ubd(Y) - lbd(X) + 2``. Disequalities use two
such binaries, one per side, joined by ``B1 + B2 >= 1``.

No LP solver is bundled. The same models are solved by a depth-first
enumeration of integer points with row-activity pruning, which also serves
as the equivalence checker for the translation.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from pathlib import Path

from tabulog.config import Settings, get_settings
from tabulog.errors import CheckerRefused, UnsupportedConstraint
from tabulog.solvers.model import (
    AllDifferent,
    Conn,
    Constraint,
    ConstraintModel,
    Element,
    Op,
    Ref,
    Rel,
    Table,
    format_expr,
    linear_form,
    relation_form,
    solutions,
)

logger = logging.getLogger(__name__)

# A 0/1-valued linear expression over binaries: ({name: coef}, constant).
Lit = tuple[dict[str, int], int]


@dataclass
class Row:
    """``sum(coefs[v] * v) =< rhs``."""

    coefs: dict[str, int]
    rhs: int
    name: str = ""


@dataclass
class Reification:
    binary: str
    m1: int
    m2: int
    rows: tuple[int, int]


@dataclass
class LinearModel:
    bounds: dict[str, tuple[int, int]] = field(default_factory=dict)
    integers: list[str] = field(default_factory=list)
    binaries: list[str] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)
    objective: tuple[str, dict[str, int], int] | None = None
    columns: dict[int, str] = field(default_factory=dict)
    reifications: list[Reification] = field(default_factory=list)

    def add_row(self, coefs: dict[str, int], rhs: int) -> int:
        coefs = {v: k for v, k in coefs.items() if k}
        self.rows.append(Row(coefs, rhs, f"c{len(self.rows) + 1}"))
        return len(self.rows) - 1

    def new_binary(self) -> str:
        name = f"b{len(self.binaries)}"
        self.binaries.append(name)
        self.bounds[name] = (0, 1)
        return name

    def variables(self) -> list[str]:
        return [*self.integers, *self.binaries]

    def box_size(self) -> int:
        size = 1
        for lo, hi in self.bounds.values():
            size *= hi - lo + 1
        return size


# ---------------------------------------------------------------------------
# Linearization
# ---------------------------------------------------------------------------


class Linearizer:
    def __init__(self, model: ConstraintModel) -> None:
        self.model = model
        self.lm = LinearModel()

    def column(self, vid: int) -> str:
        return self.lm.columns[vid]

    def run(self) -> LinearModel:
        lm = self.lm
        for vid in self.model.variables():
            name = f"x{vid}"
            lm.columns[vid] = name
            lm.integers.append(name)
            dom = self.model.domains[vid]
            lm.bounds[name] = (dom.min, dom.max)
        for vid in self.model.variables():
            dom = self.model.domains[vid]
            if dom.size != dom.max - dom.min + 1:
                for hole in range(dom.min, dom.max + 1):
                    if hole not in dom:
                        self.post(Rel("#!=", Ref(vid), hole))
        for c in self.model.constraints:
            self.post(c)
        if self.model.objective is not None:
            form = linear_form(self.model.objective.expr)
            if form is None:
                raise UnsupportedConstraint("mip", f"objective {format_expr(self.model.objective.expr)}")
            coefs, const = self.columns_of(form[0]), form[1]
            lm.objective = (self.model.objective.sense, coefs, const)
        logger.info("linearized into %d rows and %d binaries", len(lm.rows), len(lm.binaries))
        return lm

    def columns_of(self, coefs: Mapping[int, int]) -> dict[str, int]:
        return {self.column(v): k for v, k in coefs.items()}

    def bounds_of(self, coefs: Mapping[str, int], c: int) -> tuple[int, int]:
        lo = hi = c
        for v, k in coefs.items():
            a, b = self.lm.bounds[v]
            lo += min(k * a, k * b)
            hi += max(k * a, k * b)
        return lo, hi

    def relation(self, rel: Rel) -> tuple[dict[str, int], int, str]:
        form = relation_form(rel)
        if form is None:
            raise UnsupportedConstraint("mip", f"{format_expr(rel)} (not linear)")
        coefs, c, op = form
        return self.columns_of(coefs), c, op

    # -- rows ----------------------------------------------------------------------

    def le(self, coefs: dict[str, int], c: int) -> None:
        """Assert ``sum + c =< 0``."""
        self.lm.add_row(coefs, -c)

    def reify_le(self, coefs: dict[str, int], c: int) -> str:
        """A binary ``B`` with ``B <=> (sum + c =< 0)``."""
        lo, hi = self.bounds_of(coefs, c)
        m1 = hi + 1
        m2 = 2 - lo
        b = self.lm.new_binary()
        # E + M1*B =< M1
        first = self.lm.add_row({**coefs, b: m1}, m1 - c)
        # 1 - E - M2*B =< 0
        second = self.lm.add_row({**{v: -k for v, k in coefs.items()}, b: -m2}, c - 1)
        self.lm.reifications.append(Reification(b, m1, m2, (first, second)))
        return b

    def sides(self, coefs: dict[str, int], c: int) -> tuple[str, str]:
        """Binaries for ``E =< -1`` and ``E >= 1``."""
        below = self.reify_le(coefs, c + 1)
        above = self.reify_le({v: -k for v, k in coefs.items()}, -c + 1)
        return below, above

    def assert_lit(self, lit: Lit) -> None:
        coefs, c = lit
        # lit >= 1
        self.lm.add_row({v: -k for v, k in coefs.items()}, c - 1)

    # -- formulas ------------------------------------------------------------------

    def literal(self, f: object) -> Lit:
        if isinstance(f, Rel):
            coefs, c, op = self.relation(f)
            if op == "<=":
                return {self.reify_le(coefs, c): 1}, 0
            below, above = self.sides(coefs, c)
            if op == "!=":
                return {below: 1, above: 1}, 0
            return {below: -1, above: -1}, 1
        if isinstance(f, Conn):
            args = [self.literal(a) for a in f.args]
            if f.op == "#~":
                return _negate(args[0])
            a, b = args
            if f.op == "#/\\":
                return self.gate_and(a, b)
            if f.op == "#\\/":
                return self.gate_or(a, b)
            if f.op == "#=>":
                return self.gate_or(_negate(a), b)
            xor = self.gate_xor(a, b)
            return xor if f.op == "#^" else _negate(xor)
        if isinstance(f, Ref):
            name = self.column(f.id)
            lo, hi = self.lm.bounds[name]
            self.lm.bounds[name] = (max(lo, 0), min(hi, 1))
            return {name: 1}, 0
        if isinstance(f, int):
            return {}, 1 if f == 1 else 0
        raise UnsupportedConstraint("mip", f"{format_expr(f)} as a Boolean")

    def gate_and(self, a: Lit, b: Lit) -> Lit:
        r = self.lm.new_binary()
        # r =< a, r =< b, r >= a + b - 1
        self.lm.add_row(_sub({r: 1}, 0, *a), a[1])
        self.lm.add_row(_sub({r: 1}, 0, *b), b[1])
        self.lm.add_row(_sub(_add(a, b)[0], 0, {r: 1}, 0), 1 - a[1] - b[1])
        return {r: 1}, 0

    def gate_or(self, a: Lit, b: Lit) -> Lit:
        r = self.lm.new_binary()
        # r >= a, r >= b, r =< a + b
        self.lm.add_row(_sub(a[0], 0, {r: 1}, 0), -a[1])
        self.lm.add_row(_sub(b[0], 0, {r: 1}, 0), -b[1])
        self.lm.add_row(_sub({r: 1}, 0, *_add(a, b)), a[1] + b[1])
        return {r: 1}, 0

    def gate_xor(self, a: Lit, b: Lit) -> Lit:
        r = self.lm.new_binary()
        # r >= a - b, r >= b - a, r =< a + b, r =< 2 - a - b
        self.lm.add_row(_sub(_sub(a[0], 0, *b), 0, {r: 1}, 0), b[1] - a[1])
        self.lm.add_row(_sub(_sub(b[0], 0, *a), 0, {r: 1}, 0), a[1] - b[1])
        self.lm.add_row(_sub({r: 1}, 0, *_add(a, b)), a[1] + b[1])
        self.lm.add_row(_add(({r: 1}, 0), _add(a, b))[0], 2 - a[1] - b[1])
        return {r: 1}, 0

    # -- constraints ---------------------------------------------------------------

    def post(self, c: Constraint) -> None:
        if isinstance(c, Rel):
            coefs, k, op = self.relation(c)
            if op == "<=":
                self.le(coefs, k)
            elif op == "=":
                self.le(coefs, k)
                self.le({v: -a for v, a in coefs.items()}, -k)
            else:
                below, above = self.sides(coefs, k)
                self.lm.add_row({below: -1, above: -1}, -1)
            return
        if isinstance(c, Conn) and c.op == "#\\/":
            a, b = self.literal(c.args[0]), self.literal(c.args[1])
            # a + b >= 1
            coefs, const = _add(a, b)
            self.lm.add_row({v: -k for v, k in coefs.items()}, const - 1)
            return
        if isinstance(c, Conn) and c.op == "#/\\":
            self.post(c.args[0])
            self.post(c.args[1])
            return
        if isinstance(c, AllDifferent):
            for a, b in itertools.combinations(c.args, 2):
                self.post(Rel("#!=", a, b))
            return
        if isinstance(c, (Element, Table)):
            raise UnsupportedConstraint("mip", type(c).__name__.lower())
        if isinstance(c, (Conn, Ref, Op, int)):
            self.assert_lit(self.literal(c))
            return
        raise UnsupportedConstraint("mip", format_expr(c))


def _negate(lit: Lit) -> Lit:
    return {v: -k for v, k in lit[0].items()}, 1 - lit[1]


def _add(a: Lit, b: Lit) -> Lit:
    coefs = dict(a[0])
    for v, k in b[0].items():
        coefs[v] = coefs.get(v, 0) + k
    return coefs, a[1] + b[1]


def _sub(coefs_a: dict[str, int], ca: int, coefs_b: dict[str, int], cb: int) -> dict[str, int]:
    """Variable part of ``a - b`` (constants are handled by the caller)."""
    coefs = dict(coefs_a)
    for v, k in coefs_b.items():
        coefs[v] = coefs.get(v, 0) - k
    return coefs


def linearize(model: ConstraintModel) -> LinearModel:
    return Linearizer(model).run()


# ---------------------------------------------------------------------------
# LP text
# ---------------------------------------------------------------------------


def _linear_text(coefs: Mapping[str, int]) -> str:
    parts: list[str] = []
    for v, k in coefs.items():
        if not k:
            continue
        sign = "-" if k < 0 else "+"
        mag = abs(k)
        term = v if mag == 1 else f"{mag} {v}"
        if not parts:
            parts.append(term if sign == "+" else f"- {term}")
        else:
            parts.append(f"{sign} {term}")
    return " ".join(parts) if parts else "0"


def emit_lp(lm: LinearModel) -> str:
    lines: list[str] = []
    sense, coefs = ("min", {}) if lm.objective is None else lm.objective[:2]
    lines.append("Minimize" if sense == "min" else "Maximize")
    lines.append(f" obj: {_linear_text(coefs)}")
    lines.append("Subject To")
    for row in lm.rows:
        lines.append(f" {row.name}: {_linear_text(row.coefs)} <= {row.rhs}")
    bounded = [v for v in lm.integers if v in lm.bounds]
    if bounded:
        lines.append("Bounds")
        for v in bounded:
            lo, hi = lm.bounds[v]
            lines.append(f" {v} = {lo}" if lo == hi else f" {lo} <= {v} <= {hi}")
    if lm.integers:
        lines.append("Generals")
        lines.append(" " + " ".join(lm.integers))
    if lm.binaries:
        lines.append("Binaries")
        lines.append(" " + " ".join(lm.binaries))
    lines.append("End")
    return "\n".join(lines) + "\n"


def variable_map(lm: LinearModel, model: ConstraintModel) -> str:
    return "".join(f"{model.name_of(vid)} {vid} {name}\n" for vid, name in lm.columns.items())


# ---------------------------------------------------------------------------
# Integer points
# ---------------------------------------------------------------------------


def _order(lm: LinearModel) -> list[str]:
    """Integer columns first; each binary right after the last column its rows mention."""
    position = {v: i for i, v in enumerate(lm.integers)}
    key: dict[str, int] = {b: -1 for b in lm.binaries}
    for row in lm.rows:
        cols = [position[v] for v in row.coefs if v in position]
        last = max(cols, default=-1)
        for v in row.coefs:
            if v in key:
                key[v] = max(key[v], last)
    order = [b for b in lm.binaries if key[b] == -1]
    for i, v in enumerate(lm.integers):
        order.append(v)
        order += [b for b in lm.binaries if key[b] == i]
    return order


def integer_points(lm: LinearModel) -> Iterator[dict[str, int]]:
    """Every integer point of ``lm``, depth first with row-activity pruning."""
    order = _order(lm)
    index = {v: i for i, v in enumerate(order)}
    if any(not row.coefs and row.rhs < 0 for row in lm.rows):
        return
    # a row is checked whenever one of its columns is set, the unset ones at their best bound
    touching: list[list[Row]] = [[] for _ in order]
    for row in lm.rows:
        for v in row.coefs:
            touching[index[v]].append(row)
    values: dict[str, int] = {}

    def feasible(row: Row) -> bool:
        low = 0
        for v, k in row.coefs.items():
            if v in values:
                low += k * values[v]
            else:
                lo, hi = lm.bounds[v]
                low += min(k * lo, k * hi)
        return low <= row.rhs

    def search(i: int) -> Iterator[dict[str, int]]:
        if i == len(order):
            yield dict(values)
            return
        v = order[i]
        lo, hi = lm.bounds[v]
        for value in range(lo, hi + 1):
            values[v] = value
            if all(feasible(row) for row in touching[i]):
                yield from search(i + 1)
        del values[v]

    yield from search(0)


def check_exhaustive(lm: LinearModel, model: ConstraintModel, limit: int | None = None) -> bool:
    """True iff the projection of ``lm``'s integer points onto the model's variables is its solution set."""
    limit = get_settings().mip_box_limit if limit is None else limit
    if lm.box_size() > limit:
        raise CheckerRefused(f"linear model box of {lm.box_size()} points exceeds {limit}")
    vids = model.variables()
    columns = [lm.columns[v] for v in vids]
    projected = {tuple(p[c] for c in columns) for p in integer_points(lm)}
    expected = {tuple(s[v] for v in vids) for s in solutions(model, limit)}
    return projected == expected


def objective_of(lm: LinearModel, point: Mapping[str, int]) -> int:
    assert lm.objective is not None
    _, coefs, const = lm.objective
    return const + sum(k * point[v] for v, k in coefs.items())


def mip_solutions(
    model: ConstraintModel,
    project: list[int] | None = None,
    settings: Settings | None = None,
    emit_lp_path: str | Path | None = None,
) -> Iterator[dict[int, int]]:
    """Solutions of ``model`` through its linearization, one per distinct projection."""
    settings = settings or get_settings()
    project = model.variables() if project is None else project
    lm = linearize(model)
    if emit_lp_path is not None:
        Path(emit_lp_path).write_text(emit_lp(lm), encoding="utf-8")
        Path(f"{emit_lp_path}.map").write_text(variable_map(lm, model), encoding="utf-8")
        logger.info("wrote LP model to %s", emit_lp_path)
    columns = [lm.columns[v] for v in project]
    if lm.objective is not None:
        best: dict[str, int] | None = None
        best_value = 0
        better = (lambda a, b: a < b) if lm.objective[0] == "min" else (lambda a, b: a > b)
        for point in integer_points(lm):
            value = objective_of(lm, point)
            if best is None or better(value, best_value):
                best, best_value = point, value
        if best is not None:
            yield {v: best[c] for v, c in zip(project, columns)}
        return
    seen: set[tuple[int, ...]] = set()
    for point in integer_points(lm):
        key = tuple(point[c] for c in columns)
        if key not in seen:
            seen.add(key)
            yield dict(zip(project, key))
