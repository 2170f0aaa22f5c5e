"""Resource-bounded tabled planning over user ``final/1`` and ``action/4`` rules.

Every state visited by a plan search has a table entry holding the best
known outcome for it: a plan with its cost, the largest budget at which an
exhaustive search below the state failed, and whether the state is on the
current search branch. A state is expanded only when it is new, or when the
current budget exceeds its recorded failure budget; a stored plan that fits
the budget is reused as is.

The budget is recorded with the entry but is not part of its key, so states
met again with a different budget share one entry.
"""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass
from typing import TYPE_CHECKING

import structlog

from tabulog.engine.builtins import function, int_arg, nondeterministic
from tabulog.errors import ContextError, InstantiationError, TermTypeError
from tabulog.terms.ops import copy_term, deref, format_term, is_ground, resolve
from tabulog.terms.types import Struct, Term, Var, make_list

if TYPE_CHECKING:
    from tabulog.engine.machine import Engine

log = structlog.get_logger(__name__)


@dataclass
class PlanTableEntry:
    state: Term
    plan: list[Term] | None = None
    cost: int | None = None
    failed_at: int | None = None
    # the recorded failure may turn into a success under a larger budget
    failure_bounded: bool = False
    in_progress: bool = False


@dataclass
class PlannerStats:
    states_interned: int = 0
    states_expanded: int = 0
    re_expansions: int = 0
    failed_reuses: int = 0
    success_reuses: int = 0
    cycle_cuts: int = 0
    rounds: int = 0


@dataclass
class Successor:
    action: Term
    state: Term
    cost: int


@dataclass
class _Outcome:
    plan: list[Term] | None = None
    cost: int = 0
    # failure caused only by meeting a state on the current branch
    path_dependent: bool = False
    # failure that depended on the budget somewhere below
    bounded: bool = False


class Planner:
    def __init__(self, engine: Engine) -> None:
        self.engine = engine
        self.table: dict[Term, PlanTableEntry] = {}
        self.budgets: list[int] = []
        self.resource_reads = 0
        self.counters = PlannerStats()

    def stats(self) -> dict[str, int]:
        return dict(vars(self.counters))

    def clear(self) -> None:
        self.table.clear()
        self.counters = PlannerStats()

    def current_resource(self) -> int:
        if not self.budgets:
            raise ContextError("current_resource/0 called outside a plan search")
        self.resource_reads += 1
        return self.budgets[-1]

    # -- the user's domain -------------------------------------------------------

    def _intern(self, state: Term) -> Term:
        if not is_ground(state):
            raise InstantiationError(f"plan states must be ground, got {format_term(state)}", state)
        return self.engine.store.intern(resolve(state))

    def is_final(self, state: Term) -> bool:
        it = self.engine.solve_term(Struct("final", (state,)))
        try:
            return next(it, False) is None
        finally:
            it.close()

    def successors(self, state: Term) -> list[Successor]:
        nxt, action, cost = Var(), Var(), Var()
        out: list[Successor] = []
        for _ in self.engine.solve_term(Struct("action", (state, nxt, action, cost))):
            c = deref(cost)
            if type(c) is not int:
                raise TermTypeError(f"action cost must be an integer, got {format_term(c)}", c)
            if c < 0:
                raise TermTypeError(f"action cost must be non-negative, got {c}", c)
            out.append(Successor(copy_term(action), self._intern(nxt), c))
        return out

    # -- search ----------------------------------------------------------------

    def _entry(self, state: Term) -> PlanTableEntry:
        entry = self.table.get(state)
        if entry is None:
            entry = self.table[state] = PlanTableEntry(state)
            self.counters.states_interned += 1
        return entry

    def _search(self, state: Term, budget: int) -> _Outcome:
        entry = self._entry(state)
        if entry.in_progress:
            self.counters.cycle_cuts += 1
            return _Outcome(path_dependent=True)
        if entry.plan is not None and entry.cost is not None and entry.cost <= budget:
            self.counters.success_reuses += 1
            return _Outcome(entry.plan, entry.cost)
        if entry.failed_at is not None and budget <= entry.failed_at:
            self.counters.failed_reuses += 1
            return _Outcome(bounded=entry.failure_bounded)

        self.budgets.append(budget)
        entry.in_progress = True
        reads = self.resource_reads
        try:
            if self.is_final(state):
                entry.plan, entry.cost = [], 0
                return _Outcome([], 0)
            self.counters.states_expanded += 1
            if entry.failed_at is not None:
                self.counters.re_expansions += 1
            dependent = False
            # a stored plan too expensive for this budget fits a larger one
            bounded = entry.plan is not None
            successors = self.successors(state)
            bounded = bounded or self.resource_reads != reads
            for succ in successors:
                if succ.cost > budget:
                    bounded = True
                    continue
                sub = self._search(succ.state, budget - succ.cost)
                if sub.plan is not None:
                    plan = [succ.action, *sub.plan]
                    cost = succ.cost + sub.cost
                    if entry.cost is None or cost < entry.cost:
                        entry.plan, entry.cost = plan, cost
                    return _Outcome(plan, cost)
                dependent = dependent or sub.path_dependent
                bounded = bounded or sub.bounded
            if not dependent:
                if entry.failed_at is None or budget >= entry.failed_at:
                    entry.failed_at = budget
                    entry.failure_bounded = bounded
            return _Outcome(path_dependent=dependent, bounded=bounded)
        finally:
            entry.in_progress = False
            self.budgets.pop()

    def plan(self, state: Term, limit: int) -> tuple[list[Term], int] | None:
        """A plan from ``state`` costing at most ``limit`` (the first found, not necessarily the cheapest)."""
        if limit < 0:
            return None
        out = self._search(self._intern(state), limit)
        if out.plan is None:
            return None
        return out.plan, out.cost

    def best_plan(self, state: Term, limit: int) -> tuple[list[Term], int] | None:
        """The cheapest plan within ``limit``, by searching with budgets 0, step, 2*step, ...

        Stops early once a round fails without the budget cutting anything off, since a
        larger budget would search the same space.
        """
        step = self.engine.settings.plan_step
        root = self._intern(state)
        bound = 0
        while bound <= limit:
            self.counters.rounds += 1
            log.info("plan_round", limit=bound, states=len(self.table))
            out = self._search(root, bound)
            if out.plan is not None:
                return out.plan, out.cost
            if bound == limit:
                break
            if not out.bounded:
                log.info("plan_space_exhausted", limit=bound, rounds=self.counters.rounds)
                break
            bound = min(bound + step, limit)
        return None


def replay_plan(engine: Engine, state: Term, plan: list[Term]) -> tuple[Term, int] | None:
    """Re-run ``action/4`` along ``plan``; the reached state and total cost, if every step applies."""
    total = 0
    current = resolve(state)
    for action in plan:
        nxt, cost = Var(), Var()
        goal = Struct("action", (current, nxt, copy_term(action), cost))
        it = engine.solve_term(goal)
        try:
            if next(it, False) is not None:
                return None
            current = resolve(nxt)
            total += int_arg(cost, "action cost")
        finally:
            it.close()
    return current, total


# ---------------------------------------------------------------------------
# Builtins
# ---------------------------------------------------------------------------


def _answer(m: Engine, found: tuple[list[Term], int] | None, plan: Term, cost: Term) -> Iterator[None]:
    if found is None:
        return
    mark = m.mark()
    if m.unify(plan, make_list(found[0])) and m.unify(cost, found[1]):
        yield
    m.undo(mark)


def _limit(m: Engine, limit: Term | None) -> int:
    if limit is None:
        return m.settings.plan_default_limit
    return int_arg(limit, "resource limit")


@nondeterministic("plan", 2)
def _plan2(m: Engine, s: Term, plan: Term) -> Iterator[None]:
    return _answer(m, m.planner.plan(s, _limit(m, None)), plan, Var())


@nondeterministic("plan", 3)
def _plan3(m: Engine, s: Term, plan: Term, cost: Term) -> Iterator[None]:
    return _answer(m, m.planner.plan(s, _limit(m, None)), plan, cost)


@nondeterministic("plan", 4)
def _plan4(m: Engine, s: Term, limit: Term, plan: Term, cost: Term) -> Iterator[None]:
    return _answer(m, m.planner.plan(s, _limit(m, limit)), plan, cost)


@nondeterministic("best_plan", 2)
def _best_plan2(m: Engine, s: Term, plan: Term) -> Iterator[None]:
    return _answer(m, m.planner.best_plan(s, _limit(m, None)), plan, Var())


@nondeterministic("best_plan", 3)
def _best_plan3(m: Engine, s: Term, plan: Term, cost: Term) -> Iterator[None]:
    return _answer(m, m.planner.best_plan(s, _limit(m, None)), plan, cost)


@nondeterministic("best_plan", 4)
def _best_plan4(m: Engine, s: Term, limit: Term, plan: Term, cost: Term) -> Iterator[None]:
    return _answer(m, m.planner.best_plan(s, _limit(m, limit)), plan, cost)


@function("current_resource", 0)
def _current_resource(m: Engine) -> Term:
    return m.planner.current_resource()
