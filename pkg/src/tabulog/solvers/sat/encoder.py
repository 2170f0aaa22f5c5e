"""Log encoding of constraint models into CNF.

Each integer variable becomes a sign-magnitude bit vector: ``bit_length(n)``
magnitude bits (LSB first) where ``n`` is the largest absolute value of its
domain, plus a sign bit when the domain has negative values. Codes outside
the domain, including negative zero, are excluded by clauses over bit
prefixes.

Constraints are flattened into two primitives, ``x > y`` and ``x + y = z``,
with fresh intermediate variables whose domains are derived from interval
bounds. Primitives are compiled to circuits over two's-complement views of
the operands: an MSB-first comparator and a ripple-carry adder.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Mapping
from dataclasses import dataclass, field

from tabulog.errors import UnsupportedConstraint
from tabulog.solvers.domain import Domain
from tabulog.solvers.model import (
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
    format_expr,
)
from tabulog.solvers.sat.cnf import Cnf

logger = logging.getLogger(__name__)

Operand = int | Ref


@dataclass
class BitVec:
    var: int
    bits: list[int]
    sign: int | None = None

    def literals(self) -> list[int]:
        return self.bits if self.sign is None else [*self.bits, self.sign]


def bit_count(n: int) -> int:
    """Magnitude bits for values up to ``n``; equals ceil(log2(n + 1))."""
    return n.bit_length()


def decode(vec: BitVec, model: list[bool]) -> int:
    magnitude = sum(1 << i for i, b in enumerate(vec.bits) if model[b])
    if vec.sign is not None and model[vec.sign]:
        return -magnitude
    return magnitude


@dataclass
class Primitive:
    kind: str  # "gt" or "add"
    args: tuple[Operand, ...]


@dataclass
class SatEncoder:
    model: ConstraintModel
    cnf: Cnf = field(default_factory=Cnf)
    vecs: dict[int, BitVec] = field(default_factory=dict)
    domains: dict[int, Domain] = field(default_factory=dict)
    primitives: list[Primitive] = field(default_factory=list)
    backend: str = "sat"

    def __post_init__(self) -> None:
        self.domains.update(self.model.domains)
        self._next = max(self.domains, default=-1) + 1
        self._flat: dict[Expr, Operand] = {}
        self._gt: dict[tuple[Operand, Operand], int] = {}
        self._tc: dict[tuple[int, int], list[int]] = {}

    # -- variables -----------------------------------------------------------------

    def encode(self) -> Cnf:
        for vid in self.model.variables():
            self.vec(vid)
        for c in self.model.constraints:
            self.post(c)
        logger.info("encoded %d variables into %d clauses over %d literals",
                    len(self.vecs), len(self.cnf.clauses), self.cnf.num_vars)
        return self.cnf

    def vec(self, vid: int) -> BitVec:
        found = self.vecs.get(vid)
        if found is None:
            found = self.vecs[vid] = self.encode_domain(vid, self.domains[vid])
        return found

    def encode_domain(self, vid: int, dom: Domain) -> BitVec:
        n = max(abs(dom.min), abs(dom.max))
        k = bit_count(n)
        bits = [self.cnf.new_var() for _ in range(k)]
        sign = self.cnf.new_var() if dom.min < 0 else None
        vec = BitVec(vid, bits, sign)
        positive = dom.restrict(lo=0) if dom.max >= 0 else Domain()
        self._exclude(bits, [] if sign is None else [-sign], positive)
        if sign is not None:
            negative = dom.restrict(hi=-1) if dom.min < 0 else Domain()
            magnitudes = Domain(tuple((-hi, -lo) for lo, hi in reversed(negative.ivs)))
            self._exclude(bits, [sign], magnitudes)
        return vec

    def _exclude(self, bits: list[int], condition: list[int], allowed: Domain) -> None:
        """Forbid every magnitude code not in ``allowed`` under ``condition``."""

        def count(lo: int, hi: int) -> int:
            if allowed.empty or hi < allowed.min or lo > allowed.max:
                return 0
            return allowed.restrict(lo, hi).size

        def rec(level: int, prefix: list[int], lo: int, hi: int) -> None:
            n = count(lo, hi)
            if n == hi - lo + 1:
                return
            if n == 0:
                self.cnf.add([*(-lit for lit in condition), *(-lit for lit in prefix)])
                return
            bit = bits[level - 1]
            mid = lo + (1 << (level - 1))
            rec(level - 1, [*prefix, -bit], lo, mid - 1)
            rec(level - 1, [*prefix, bit], mid, hi)

        rec(len(bits), [], 0, (1 << len(bits)) - 1)

    def fresh(self, lo: int, hi: int) -> Ref:
        vid = self._next
        self._next += 1
        self.domains[vid] = Domain.interval(lo, hi)
        self.vec(vid)
        return Ref(vid)

    def dom_of(self, x: Operand) -> Domain:
        return Domain.value(x) if isinstance(x, int) else self.domains[x.id]

    def width_of(self, x: Operand) -> int:
        if isinstance(x, int):
            return bit_count(abs(x))
        return len(self.vec(x.id).bits)

    # -- two's-complement views ------------------------------------------------------

    def tc(self, x: Operand, width: int) -> list[int]:
        if isinstance(x, int):
            return [self.cnf.const(bool((x >> i) & 1)) for i in range(width)]
        key = (x.id, width)
        found = self._tc.get(key)
        if found is not None:
            return found
        vec = self.vec(x.id)
        bits = self.cnf.pad(vec.bits, width)
        if vec.sign is not None:
            s = vec.sign
            flipped = [self.cnf.xor_gate(b, s) for b in bits]
            out = []
            carry = s
            for b in flipped:
                out.append(self.cnf.xor_gate(b, carry))
                carry = self.cnf.and_gate([b, carry])
            bits = out
            if width > len(vec.bits):
                # the top bit of the view is the sign, negative zero being excluded
                self.cnf.assert_equal(bits[-1], s)
        self._tc[key] = bits
        return bits

    # -- primitives ------------------------------------------------------------------

    def gt(self, x: Operand, y: Operand) -> int:
        """Literal equivalent to ``x > y``."""
        if isinstance(x, int) and isinstance(y, int):
            return self.cnf.const(x > y)
        dx, dy = self.dom_of(x), self.dom_of(y)
        if dx.min > dy.max:
            return self.cnf.true
        if dx.max <= dy.min:
            return self.cnf.false
        key = (x, y)
        found = self._gt.get(key)
        if found is None:
            self.primitives.append(Primitive("gt", (x, y)))
            width = max(self.width_of(x), self.width_of(y)) + 2
            tx, ty = self.tc(x, width), self.tc(y, width)
            found = self._gt[key] = self.cnf.greater_unsigned(
                [*tx[:-1], -tx[-1]], [*ty[:-1], -ty[-1]]
            )
        return found

    def add(self, x: Operand, y: Operand, z: Operand) -> None:
        """Assert ``x + y = z``."""
        self.primitives.append(Primitive("add", (x, y, z)))
        width = max(self.width_of(x), self.width_of(y), self.width_of(z)) + 2
        sums, _ = self.cnf.add_bits(self.tc(x, width), self.tc(y, width))
        for s, b in zip(sums, self.tc(z, width)):
            self.cnf.assert_equal(s, b)

    def equal(self, x: Operand, y: Operand) -> None:
        self.cnf.add([-self.gt(x, y)])
        self.cnf.add([-self.gt(y, x)])

    # -- flattening ------------------------------------------------------------------

    def bounds(self, e: Expr) -> tuple[int, int]:
        if isinstance(e, int):
            return e, e
        if isinstance(e, Ref):
            d = self.domains[e.id]
            return d.min, d.max
        if e.name == "+":
            (a, b), (c, d) = self.bounds(e.args[0]), self.bounds(e.args[1])
            return a + c, b + d
        if e.name == "-":
            (a, b), (c, d) = self.bounds(e.args[0]), self.bounds(e.args[1])
            return a - d, b - c
        if e.name == "neg":
            a, b = self.bounds(e.args[0])
            return -b, -a
        if e.name == "*":
            (a, b), (c, d) = self.bounds(e.args[0]), self.bounds(e.args[1])
            corners = [a * c, a * d, b * c, b * d]
            return min(corners), max(corners)
        raise UnsupportedConstraint(self.backend, f"function {e.name}/{len(e.args)}")

    def flat(self, e: Expr) -> Operand:
        if isinstance(e, (int, Ref)):
            return e
        found = self._flat.get(e)
        if found is None:
            lo, hi = self.bounds(e)
            found = self._flat[e] = self.fresh(lo, hi) if lo != hi else lo
            if isinstance(found, Ref):
                self.flat_into(e, found)
        return found

    def flat_into(self, e: Expr, target: Operand) -> None:
        """Emit primitives forcing ``target = e``."""
        if isinstance(e, (int, Ref)):
            self.equal(e, target)
            return
        name, args = e.name, e.args
        if name == "+":
            self.add(self.flat(args[0]), self.flat(args[1]), target)
        elif name == "-":
            self.add(target, self.flat(args[1]), self.flat(args[0]))
        elif name == "neg":
            self.add(target, self.flat(args[0]), 0)
        elif name == "*" and (isinstance(args[0], int) or isinstance(args[1], int)):
            k, x = (args[0], args[1]) if isinstance(args[0], int) else (args[1], args[0])
            self.scale_into(k, self.flat(x), target)  # type: ignore[arg-type]
        else:
            raise UnsupportedConstraint(self.backend, f"{format_expr(e)} (not linear)")

    def scale_into(self, k: int, x: Operand, target: Operand) -> None:
        """``target = k * x`` by unrolling into additions."""
        if isinstance(x, int):
            self.equal(k * x, target)
            return
        if k == 0 or k == 1:
            self.equal(k * x if k == 0 else x, target)
            return
        if k < 0:
            lo, hi = self.bounds(Op("*", (-k, x)))
            positive = self.fresh(lo, hi)
            self.scale_into(-k, x, positive)
            self.add(target, positive, 0)
            return
        d = self.dom_of(x)
        powers = [x]
        for i in range(1, k.bit_length()):
            prev = powers[-1]
            if i == k.bit_length() - 1 and k == 1 << i:
                self.add(prev, prev, target)
                return
            doubled = self.fresh(min(d.min << i, d.max << i), max(d.min << i, d.max << i))
            self.add(prev, prev, doubled)
            powers.append(doubled)
        terms = [p for i, p in enumerate(powers) if (k >> i) & 1]
        acc = terms[0]
        lo, hi = self.bounds(acc)
        for i, term in enumerate(terms[1:], start=1):
            tlo, thi = self.bounds(term)
            lo, hi = lo + tlo, hi + thi
            if i == len(terms) - 1:
                self.add(acc, term, target)
                return
            nxt = self.fresh(lo, hi)
            self.add(acc, term, nxt)
            acc = nxt
        self.equal(acc, target)

    # -- formulas --------------------------------------------------------------------

    def relation(self, rel: Rel) -> int:
        p, q = self.flat(rel.lhs), self.flat(rel.rhs)
        op = rel.op
        if op == "#>":
            return self.gt(p, q)
        if op == "#<":
            return self.gt(q, p)
        if op == "#>=":
            return -self.gt(q, p)
        if op == "#=<":
            return -self.gt(p, q)
        eq = self.cnf.and_gate([-self.gt(p, q), -self.gt(q, p)])
        return eq if op == "#=" else -eq

    def value_literal(self, x: Operand, v: int) -> int:
        """Literal for ``x = v``."""
        if isinstance(x, int):
            return self.cnf.const(x == v)
        vec = self.vec(x.id)
        mag = abs(v)
        if mag >= 1 << len(vec.bits) or (v < 0 and vec.sign is None):
            return self.cnf.false
        lits = [b if (mag >> i) & 1 else -b for i, b in enumerate(vec.bits)]
        if vec.sign is not None and v != 0:
            lits.append(vec.sign if v < 0 else -vec.sign)
        return self.cnf.and_gate(lits)

    def formula(self, f: object) -> int:
        if isinstance(f, Rel):
            return self.relation(f)
        if isinstance(f, Conn):
            lits = [self.formula(a) for a in f.args]
            op = f.op
            if op == "#/\\":
                return self.cnf.and_gate(lits)
            if op == "#\\/":
                return self.cnf.or_gate(lits)
            if op == "#^":
                return self.cnf.xor_gate(*lits)
            if op == "#=>":
                return self.cnf.implies_gate(*lits)
            if op == "#<=>":
                return self.cnf.equiv_gate(*lits)
            return -lits[0]
        if isinstance(f, (int, Ref, Op)):
            x = self.flat(f)
            one = self.value_literal(x, 1)
            self.cnf.add([self.value_literal(x, 0), one])
            return one
        raise UnsupportedConstraint(self.backend, f"{format_expr(f)} inside a Boolean connective")

    def post(self, c: Constraint) -> None:
        if isinstance(c, Rel) and c.op == "#=":
            if isinstance(c.rhs, (int, Ref)) and isinstance(c.lhs, Op):
                self.flat_into(c.lhs, c.rhs)
                return
            if isinstance(c.lhs, (int, Ref)) and isinstance(c.rhs, Op):
                self.flat_into(c.rhs, c.lhs)
                return
        if isinstance(c, AllDifferent):
            for a, b in itertools.combinations(c.args, 2):
                self.cnf.add([self.relation(Rel("#!=", a, b))])
            return
        if isinstance(c, Element):
            self._element(c)
            return
        if isinstance(c, Table):
            args = [self.flat(a) for a in c.args]
            if c.negated:
                for t in c.tuples:
                    self.cnf.add([-self.value_literal(a, v) for a, v in zip(args, t)])
            else:
                rows = [self.cnf.and_gate([self.value_literal(a, v) for a, v in zip(args, t)]) for t in c.tuples]
                self.cnf.add(rows)
            return
        self.cnf.add([self.formula(c)])

    def _element(self, c: Element) -> None:
        index = self.flat(c.index)
        n = len(c.items)
        for i in self.dom_of(index):
            lit = self.value_literal(index, i)
            if 1 <= i <= n:
                self.cnf.add([-lit, self.relation(Rel("#=", c.items[i - 1], c.value))])
            else:
                self.cnf.add([-lit])

    # -- solutions -------------------------------------------------------------------

    def decode(self, model: list[bool], vids: list[int] | None = None) -> dict[int, int]:
        out = {}
        for vid in self.model.variables() if vids is None else vids:
            value = decode(self.vec(vid), model)
            if value not in self.domains[vid]:
                raise AssertionError(f"decoded {value} for x{vid} outside {self.domains[vid]!r}")
            out[vid] = value
        return out

    def blocking_clause(self, assignment: Mapping[int, int]) -> list[int]:
        clause = []
        for vid, value in assignment.items():
            vec = self.vec(vid)
            mag = abs(value)
            for i, b in enumerate(vec.bits):
                clause.append(-b if (mag >> i) & 1 else b)
            if vec.sign is not None:
                clause.append(-vec.sign if value < 0 else vec.sign)
        return clause

    def decision_literals(self) -> list[int]:
        """Bits of the model's own variables; every other literal follows from them by propagation."""
        return [lit for vid in self.model.variables() for lit in self.vec(vid).literals()]

    def variable_map(self) -> str:
        """One line per model variable: name, id, magnitude literals and sign literal."""
        lines = []
        for vid in self.model.variables():
            vec = self.vec(vid)
            sign = str(vec.sign) if vec.sign is not None else "-"
            bits = " ".join(str(b) for b in vec.bits) or "-"
            lines.append(f"{self.model.name_of(vid)} {vid} bits {bits} sign {sign}")
        return "\n".join(lines) + "\n"
