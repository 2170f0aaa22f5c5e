"""A small DPLL solver with two watched literals.

With ``learning`` on, conflicts are analysed to the first unique implication
point, the learnt clause is kept and the search backjumps (CDCL). With it off
the solver flips the most recent unflipped decision (plain DPLL). Decisions
follow variable activity; ties are broken by a seeded random order, so runs
are deterministic for a given seed. Variables passed to :meth:`Solver.prefer`
are always decided before the others; the encoder uses it for the bits of
model variables, which fix every Tseitin auxiliary through propagation.

Clauses may be added between calls to :meth:`Solver.solve`; learnt clauses
persist across calls.
"""

from __future__ import annotations

import heapq
import logging
import random
from collections.abc import Iterable

logger = logging.getLogger(__name__)

PREFERRED, OTHER = 0, 1


def _index(lit: int) -> int:
    return 2 * lit if lit > 0 else -2 * lit + 1


class Solver:
    def __init__(self, num_vars: int = 0, learning: bool = True, seed: int = 0) -> None:
        self.learning = learning
        self.rng = random.Random(seed)
        self.num_vars = 0
        self.clauses: list[list[int]] = []
        self.watches: list[list[int]] = [[], []]
        self.value: list[int] = [0]  # per variable: 1, -1 or 0
        self.level: list[int] = [0]
        self.reason: list[int] = [-1]
        self.phase: list[bool] = [False]
        self.activity: list[float] = [0.0]
        self.tier: list[int] = [OTHER]
        self.heap: list[tuple[int, float, int]] = []
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.flipped: list[bool] = []
        self.qhead = 0
        self.unsat = False
        self.bump = 1.0
        self.conflicts = 0
        self.decisions = 0
        self.propagations = 0
        self.learnt = 0
        for _ in range(num_vars):
            self.new_var()

    def new_var(self) -> int:
        self.num_vars += 1
        v = self.num_vars
        self.watches += [[], []]
        self.value.append(0)
        self.level.append(0)
        self.reason.append(-1)
        self.phase.append(False)
        self.activity.append(self.rng.random() * 1e-6)
        self.tier.append(OTHER)
        heapq.heappush(self.heap, (OTHER, -self.activity[v], v))
        return v

    def ensure_vars(self, n: int) -> None:
        while self.num_vars < n:
            self.new_var()

    def prefer(self, variables: Iterable[int]) -> None:
        """Decide ``variables`` before any other unassigned variable."""
        for v in variables:
            v = abs(v)
            self.ensure_vars(v)
            if self.tier[v] != PREFERRED:
                self.tier[v] = PREFERRED
                heapq.heappush(self.heap, (PREFERRED, -self.activity[v], v))

    # -- assignment --------------------------------------------------------------

    def lit_value(self, lit: int) -> int:
        v = self.value[abs(lit)]
        return v if lit > 0 else -v

    def _enqueue(self, lit: int, reason: int) -> None:
        v = abs(lit)
        self.value[v] = 1 if lit > 0 else -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def backtrack(self, level: int) -> None:
        if len(self.trail_lim) <= level:
            return
        stop = self.trail_lim[level]
        value, phase, reason, tier, activity, heap = (
            self.value, self.phase, self.reason, self.tier, self.activity, self.heap,
        )
        for lit in self.trail[stop:]:
            v = lit if lit > 0 else -lit
            phase[v] = lit > 0
            value[v] = 0
            reason[v] = -1
            heapq.heappush(heap, (tier[v], -activity[v], v))
        del self.trail[stop:]
        del self.trail_lim[level:]
        del self.flipped[level:]
        self.qhead = min(self.qhead, len(self.trail))

    # -- clauses -----------------------------------------------------------------

    def add_clause(self, clause: Iterable[int]) -> bool:
        """Add a clause at decision level 0; returns False once the formula is unsatisfiable."""
        self.backtrack(0)
        if self.unsat:
            return False
        lits: list[int] = []
        for lit in clause:
            self.ensure_vars(abs(lit))
            if -lit in lits:
                return True
            if lit in lits:
                continue
            val = self.lit_value(lit)
            if val == 1 and self.level[abs(lit)] == 0:
                return True
            if val == -1 and self.level[abs(lit)] == 0:
                continue
            lits.append(lit)
        if not lits:
            self.unsat = True
            return False
        if len(lits) == 1:
            self._enqueue(lits[0], -1)
            if self._propagate() != -1:
                self.unsat = True
                return False
            return True
        self._attach(lits)
        return True

    def _attach(self, lits: list[int]) -> int:
        ci = len(self.clauses)
        self.clauses.append(lits)
        self.watches[_index(-lits[0])].append(ci)
        self.watches[_index(-lits[1])].append(ci)
        return ci

    def _propagate(self) -> int:
        """Unit propagation; returns a conflicting clause index or -1."""
        trail, value, level, reason = self.trail, self.value, self.level, self.reason
        clauses, watches = self.clauses, self.watches
        depth = len(self.trail_lim)
        qhead = self.qhead
        while qhead < len(trail):
            lit = trail[qhead]
            qhead += 1
            self.propagations += 1
            false_lit = -lit
            # clauses watching -lit, which just became false
            watchers = watches[2 * lit if lit > 0 else -2 * lit + 1]
            i = 0
            n = len(watchers)
            while i < n:
                ci = watchers[i]
                c = clauses[ci]
                if c[0] == false_lit:
                    c[0] = c[1]
                    c[1] = false_lit
                first = c[0]
                fv = value[first] if first > 0 else -value[-first]
                if fv == 1:
                    i += 1
                    continue
                for k in range(2, len(c)):
                    other = c[k]
                    if (value[other] if other > 0 else -value[-other]) != -1:
                        c[1] = other
                        c[k] = false_lit
                        watches[-2 * other if other < 0 else 2 * other + 1].append(ci)
                        n -= 1
                        watchers[i] = watchers[n]
                        watchers.pop()
                        break
                else:
                    if fv == -1:
                        self.qhead = len(trail)
                        return ci
                    v = first if first > 0 else -first
                    value[v] = 1 if first > 0 else -1
                    level[v] = depth
                    reason[v] = ci
                    trail.append(first)
                    i += 1
        self.qhead = qhead
        return -1

    # -- conflict analysis -------------------------------------------------------

    def _bump(self, v: int) -> None:
        self.activity[v] += self.bump
        if self.activity[v] > 1e100:
            for i in range(1, self.num_vars + 1):
                self.activity[i] *= 1e-100
            self.bump *= 1e-100
        heapq.heappush(self.heap, (self.tier[v], -self.activity[v], v))

    def _analyze(self, conflict: int) -> tuple[list[int], int]:
        current = len(self.trail_lim)
        seen: set[int] = set()
        learnt: list[int] = [0]
        pending = 0
        index = len(self.trail) - 1
        clause = self.clauses[conflict]
        pivot = 0
        while True:
            for lit in clause:
                v = abs(lit)
                if v == pivot or v in seen or self.level[v] == 0:
                    continue
                seen.add(v)
                self._bump(v)
                if self.level[v] == current:
                    pending += 1
                else:
                    learnt.append(lit)
            while abs(self.trail[index]) not in seen:
                index -= 1
            pivot_lit = self.trail[index]
            pivot = abs(pivot_lit)
            index -= 1
            pending -= 1
            if pending == 0:
                learnt[0] = -pivot_lit
                break
            clause = self.clauses[self.reason[pivot]]
        self.bump *= 1.05
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda k: self.level[abs(learnt[k])])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, self.level[abs(learnt[1])]

    def _pick(self) -> int:
        heap, value = self.heap, self.value
        while heap:
            _, _, v = heapq.heappop(heap)
            if value[v] == 0:
                return v if self.phase[v] else -v
        return 0

    def _decide(self, lit: int, flipped: bool = False) -> None:
        self.trail_lim.append(len(self.trail))
        self.flipped.append(flipped)
        self._enqueue(lit, -1)

    # -- solving -----------------------------------------------------------------

    def solve(self) -> bool:
        self.backtrack(0)
        if self.unsat:
            return False
        while True:
            conflict = self._propagate()
            if conflict != -1:
                self.conflicts += 1
                if not self.trail_lim:
                    self.unsat = True
                    return False
                if self.learning:
                    learnt, level = self._analyze(conflict)
                    self.backtrack(level)
                    if len(learnt) == 1:
                        self._enqueue(learnt[0], -1)
                    else:
                        self._enqueue(learnt[0], self._attach(learnt))
                        self.learnt += 1
                    continue
                # chronological: flip the latest decision not flipped yet
                level = len(self.flipped) - 1
                while level >= 0 and self.flipped[level]:
                    level -= 1
                if level < 0:
                    self.unsat = True
                    return False
                decision = self.trail[self.trail_lim[level]]
                self.backtrack(level)
                self._decide(-decision, flipped=True)
                continue
            lit = self._pick()
            if lit == 0:
                return True
            self.decisions += 1
            self._decide(lit)

    def model(self) -> list[bool]:
        """Truth values indexed by variable (index 0 unused)."""
        return [False] + [self.value[v] == 1 for v in range(1, self.num_vars + 1)]

    def stats(self) -> dict[str, int]:
        return {
            "sat_vars": self.num_vars,
            "sat_clauses": len(self.clauses),
            "sat_conflicts": self.conflicts,
            "sat_decisions": self.decisions,
            "sat_propagations": self.propagations,
            "sat_learnt": self.learnt,
        }


def solve_cnf(num_vars: int, clauses: list[list[int]], learning: bool = True, seed: int = 0) -> list[bool] | None:
    solver = Solver(num_vars, learning=learning, seed=seed)
    for clause in clauses:
        if not solver.add_clause(clause):
            return None
    return solver.model() if solver.solve() else None
