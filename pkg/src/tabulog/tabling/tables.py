"""Linear tabling with mode-directed answers.

The first call of a variant becomes its producer and runs the predicate's
rules, recording answers. A call that meets a producer still on the
evaluation stack is a looping call: it consumes the answers recorded so far
and marks every producer above the looped-to entry as a follower of it. The
top-most looped-to producer (the leader) re-runs its rules until an
iteration records no new or improved answer anywhere, then completes itself
and every follower evaluated under it. Followers are evaluated once per
leader iteration and stay incomplete until their leader completes.

Modes: ``+`` arguments are inputs and form the key together with the
predicate; ``-``, ``min`` and ``max`` arguments are outputs; an ``nt``
argument is passed to the rules but neither keyed nor stored. Without a
mode declaration the whole call, up to variable renaming, is the key and
whole-call instances are the answers.
"""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import structlog

from tabulog.errors import ContractError, InstantiationError, TermTypeError
from tabulog.terms.ops import (
    copy_term,
    deref,
    format_term,
    is_ground,
    resolve,
    variant_abstract,
    variant_instantiate,
)
from tabulog.terms.types import Struct, Term, Var

if TYPE_CHECKING:
    from tabulog.engine.machine import Engine
    from tabulog.lang.compiler import Predicate

log = structlog.get_logger(__name__)

INCOMPLETE = "incomplete"
COMPLETE = "complete"

ANSWER = "$answer"


@dataclass
class AnswerTable:
    """The answers of one variant call.

    With an optimized mode only the best answer is kept; ``best`` is its
    objective value and never gets worse across updates.
    """

    pred: str
    key: Term
    optimize: str | None = None
    status: str = INCOMPLETE
    answers: list[Term] = field(default_factory=list)
    seen: set[Term] = field(default_factory=set)
    best: int | None = None
    # evaluation stack bookkeeping
    position: int = -1
    low: int = -1
    looped: bool = False

    @property
    def complete(self) -> bool:
        return self.status == COMPLETE

    @property
    def evaluating(self) -> bool:
        return self.position >= 0

    def update(self, answer: Term, value: int | None = None) -> bool:
        """Record ``answer``; True iff the table changed."""
        if self.optimize is None:
            if answer in self.seen:
                return False
            self.seen.add(answer)
            self.answers.append(answer)
            return True
        assert value is not None
        if self.best is not None:
            better = value < self.best if self.optimize == "min" else value > self.best
            if not better:
                return False
        self.best = value
        self.answers[:] = [answer]
        return True


@dataclass
class PredicateStats:
    keys: int = 0
    hits: int = 0
    producer_iterations: int = 0
    completed: int = 0


class Tables:
    def __init__(self, engine: Engine) -> None:
        self.engine = engine
        self.entries: dict[tuple[tuple[str, int], Term], AnswerTable] = {}
        self.stack: list[AnswerTable] = []
        self.followers: list[AnswerTable] = []
        # bumped by every answer that changes a table
        self.changes = 0
        self.counters: dict[str, PredicateStats] = {}

    def clear(self) -> None:
        if self.stack:
            raise ContractError("cannot clear tables during a tabled evaluation")
        self.entries.clear()
        self.followers.clear()
        self.counters.clear()
        self.changes = 0

    def stats(self) -> dict[str, dict[str, int]]:
        return {pred: vars(c).copy() for pred, c in sorted(self.counters.items())}

    def _counter(self, pred: Predicate) -> PredicateStats:
        c = self.counters.get(pred.indicator)
        if c is None:
            c = self.counters[pred.indicator] = PredicateStats()
        return c

    # -- keys and answers ----------------------------------------------------------

    def key_of(self, pred: Predicate, args: list[Term]) -> Term:
        modes = pred.modes
        if modes is None:
            return self.engine.store.intern(variant_abstract(Struct(pred.name, tuple(args))))
        inputs: list[Term] = []
        for mode, a in zip(modes, args):
            if mode != "+":
                continue
            if not is_ground(a):
                raise InstantiationError(
                    f"input argument of tabled {pred.indicator} is not ground: {format_term(a)}", a
                )
            inputs.append(resolve(a))
        return self.engine.store.intern(Struct(pred.name, tuple(inputs)))

    def _producer_args(self, pred: Predicate, args: list[Term]) -> list[Term]:
        if pred.modes is None:
            return list(copy_term(Struct(pred.name, tuple(args))).args)  # type: ignore[union-attr]
        return [a if mode in ("+", "nt") else Var() for mode, a in zip(pred.modes, args)]

    def _answer_of(self, pred: Predicate, args: list[Term]) -> tuple[Term, int | None]:
        modes = pred.modes
        if modes is None:
            outs = args
        else:
            outs = [a for mode, a in zip(modes, args) if mode in ("-", "min", "max")]
        value: int | None = None
        if modes is not None and pred_optimized(modes) is not None:
            v = deref(args[pred_optimized(modes)])  # type: ignore[index]
            if type(v) is not int:
                raise TermTypeError(f"optimized argument of {pred.indicator} must be an integer, got {format_term(v)}", v)
            value = v
        answer = self.engine.store.intern(variant_abstract(Struct(ANSWER, tuple(outs))))
        return answer, value

    def _consume(self, pred: Predicate, args: list[Term], answers: list[Term]) -> Iterator[None]:
        engine = self.engine
        if pred.modes is None:
            targets = args
        else:
            targets = [a for mode, a in zip(pred.modes, args) if mode in ("-", "min", "max")]
        for answer in answers:
            values = variant_instantiate(answer).args  # type: ignore[union-attr]
            mark = engine.mark()
            if all(engine.unify(t, v) for t, v in zip(targets, values)):
                yield
            engine.undo(mark)

    # -- calls -----------------------------------------------------------------------

    def call(self, pred: Predicate, args: list[Term]) -> Iterator[None]:
        key = self.key_of(pred, args)
        counter = self._counter(pred)
        entry = self.entries.get((pred.key, key))
        if entry is None:
            optimized = None if pred.modes is None else pred_optimized(pred.modes)
            entry = AnswerTable(pred.indicator, key, None if optimized is None else pred.modes[optimized])  # type: ignore[index]
            self.entries[(pred.key, key)] = entry
            counter.keys += 1
        if entry.complete:
            counter.hits += 1
            yield from self._consume(pred, args, list(entry.answers))
            return
        if entry.evaluating:
            counter.hits += 1
            self._loop_to(entry)
            yield from self._consume(pred, args, list(entry.answers))
            return
        self._produce(pred, args, entry, counter)
        yield from self._consume(pred, args, list(entry.answers))

    def _loop_to(self, entry: AnswerTable) -> None:
        entry.looped = True
        for above in self.stack[entry.position + 1 :]:
            above.low = min(above.low, entry.position)

    def _produce(self, pred: Predicate, args: list[Term], entry: AnswerTable, counter: PredicateStats) -> None:
        entry.position = entry.low = len(self.stack)
        entry.looped = False
        self.stack.append(entry)
        start = len(self.followers)
        try:
            while True:
                del self.followers[start:]
                before = self.changes
                counter.producer_iterations += 1
                self._evaluate(pred, args, entry)
                if entry.low < entry.position or not entry.looped:
                    break
                if self.changes == before:
                    break
                log.debug("tabling_iteration", pred=entry.pred, answers=len(entry.answers))
        finally:
            self.stack.pop()
            entry.position = -1
        if entry.low < len(self.stack):
            # a follower: its leader completes it
            self.followers.append(entry)
            return
        self._complete(entry)
        for follower in self.followers[start:]:
            self._complete(follower)
        del self.followers[start:]

    def _complete(self, entry: AnswerTable) -> None:
        if entry.complete:
            return
        entry.status = COMPLETE
        counter = self.counters.get(entry.pred)
        if counter is not None:
            counter.completed += 1

    def _evaluate(self, pred: Predicate, args: list[Term], entry: AnswerTable) -> None:
        call_args = self._producer_args(pred, args)
        for _ in self.engine.call_rules(pred, call_args):
            answer, value = self._answer_of(pred, call_args)
            if entry.update(answer, value):
                self.changes += 1


def pred_optimized(modes: tuple[str, ...]) -> int | None:
    for i, m in enumerate(modes):
        if m in ("min", "max"):
            return i
    return None
