"""CNF formulas, Tseitin gates and the comparator/adder circuits.

Literals are non-zero integers in DIMACS convention. ``Cnf.true`` is a
literal fixed to true by a unit clause; ``-cnf.true`` is false. Gate helpers
fold constants, so circuits over constant inputs emit no clauses.
"""

from __future__ import annotations

from collections.abc import Iterable
from pathlib import Path

from tabulog.errors import ContractError


class Cnf:
    def __init__(self) -> None:
        self.num_vars = 0
        self.clauses: list[list[int]] = []
        self.true = self.new_var()
        self.clauses.append([self.true])

    def new_var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def add(self, clause: Iterable[int]) -> None:
        lits = []
        for lit in clause:
            if lit == self.true:
                return
            if lit == -self.true:
                continue
            lits.append(lit)
        self.clauses.append(lits)

    @property
    def false(self) -> int:
        return -self.true

    def const(self, value: bool) -> int:
        return self.true if value else self.false

    def is_const(self, lit: int) -> bool:
        return abs(lit) == self.true

    def validate(self) -> None:
        for clause in self.clauses:
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ContractError(f"literal {lit} references an unallocated variable")

    # -- gates -------------------------------------------------------------------

    def and_gate(self, lits: list[int]) -> int:
        ins = []
        for lit in lits:
            if lit == self.false:
                return self.false
            if lit != self.true:
                ins.append(lit)
        if not ins:
            return self.true
        if len(ins) == 1:
            return ins[0]
        out = self.new_var()
        for lit in ins:
            self.clauses.append([-out, lit])
        self.clauses.append([out, *(-lit for lit in ins)])
        return out

    def or_gate(self, lits: list[int]) -> int:
        return -self.and_gate([-lit for lit in lits])

    def xor_gate(self, a: int, b: int) -> int:
        if self.is_const(a):
            return -b if a == self.true else b
        if self.is_const(b):
            return -a if b == self.true else a
        if a == b:
            return self.false
        if a == -b:
            return self.true
        out = self.new_var()
        self.clauses += [[-out, a, b], [-out, -a, -b], [out, -a, b], [out, a, -b]]
        return out

    def equiv_gate(self, a: int, b: int) -> int:
        return -self.xor_gate(a, b)

    def implies_gate(self, a: int, b: int) -> int:
        return self.or_gate([-a, b])

    def majority(self, a: int, b: int, c: int) -> int:
        for k, lit in enumerate((a, b, c)):
            if self.is_const(lit):
                x, y = [v for i, v in enumerate((a, b, c)) if i != k]
                return self.or_gate([x, y]) if lit == self.true else self.and_gate([x, y])
        if a == b or a == c:
            return a
        if b == c:
            return b
        out = self.new_var()
        for x, y in ((a, b), (a, c), (b, c)):
            self.clauses += [[-x, -y, out], [x, y, -out]]
        return out

    def assert_equal(self, a: int, b: int) -> None:
        self.add([-a, b])
        self.add([a, -b])

    # -- circuits ----------------------------------------------------------------

    def pad(self, bits: list[int], width: int, fill: int | None = None) -> list[int]:
        return bits + [self.false if fill is None else fill] * (width - len(bits))

    def full_adder(self, a: int, b: int, carry: int) -> tuple[int, int]:
        """``(sum, carry_out)`` literals."""
        return self.xor_gate(self.xor_gate(a, b), carry), self.majority(a, b, carry)

    def add_bits(self, xs: list[int], ys: list[int], carry: int | None = None) -> tuple[list[int], int]:
        """Ripple-carry sum of two equal-width vectors (LSB first)."""
        carry = self.false if carry is None else carry
        out = []
        for a, b in zip(xs, ys):
            s, carry = self.full_adder(a, b, carry)
            out.append(s)
        return out, carry

    def add_unsigned(self, xs: list[int], ys: list[int], zs: list[int], forbid_overflow: bool = True) -> None:
        """Assert ``x + y = z`` over unsigned vectors padded to a common width."""
        width = max(len(xs), len(ys), len(zs))
        sums, carry = self.add_bits(self.pad(xs, width), self.pad(ys, width))
        for s, z in zip(sums, self.pad(zs, width)):
            self.assert_equal(s, z)
        if forbid_overflow:
            self.add([-carry])

    def greater_unsigned(self, xs: list[int], ys: list[int]) -> int:
        """A literal equivalent to ``x > y`` (MSB-first comparator chain)."""
        width = max(len(xs), len(ys))
        xs = self.pad(xs, width)
        ys = self.pad(ys, width)
        gt = self.false
        eq = self.true
        for a, b in zip(reversed(xs), reversed(ys)):
            here = self.and_gate([eq, a, -b])
            gt = self.or_gate([gt, here])
            eq = self.and_gate([eq, self.equiv_gate(a, b)])
        return gt

    # -- DIMACS ------------------------------------------------------------------

    def to_dimacs(self) -> str:
        self.validate()
        lines = [f"p cnf {self.num_vars} {len(self.clauses)}"]
        lines += [" ".join(str(lit) for lit in clause) + " 0" for clause in self.clauses]
        return "\n".join(lines) + "\n"

    def write_dimacs(self, path: str | Path) -> None:
        Path(path).write_text(self.to_dimacs(), encoding="ascii")


def parse_dimacs(text: str) -> tuple[int, list[list[int]]]:
    num_vars = 0
    clauses: list[list[int]] = []
    current: list[int] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            num_vars = int(line.split()[2])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(current)
                current = []
            else:
                current.append(lit)
    return num_vars, clauses
