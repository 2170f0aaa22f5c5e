"""Lowering of loops, list comprehensions, assignments and if-then-else.

After :func:`lower_loops` a program contains only plain goals: every
``foreach`` is a call to a generated tail-recursive predicate, every list
comprehension is an accumulating loop followed by ``reverse``, and every
``X := E`` is a unification with a renamed copy of ``X``.

Scoping: a variable that occurs in a loop body and was seen before the loop
is global (passed into every iteration); all other body variables are local
to one iteration. Globals assigned with ``:=`` in the body are threaded
through the iterations as accumulator pairs.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

from tabulog.lang import ast

logger = logging.getLogger(__name__)

LOOP_PREFIX = "$foreach_"
ITER_FUNCTION = "$iter"


@dataclass
class Scope:
    seen: set[str] = field(default_factory=set)
    renames: dict[str, str] = field(default_factory=dict)

    def clone(self) -> Scope:
        return Scope(set(self.seen), dict(self.renames))

    def current(self, name: str) -> str:
        return self.renames.get(name, name)


def variables(e: ast.Expr | None) -> list[str]:
    """Variable names of ``e`` in order of first occurrence, ``_`` excluded."""
    out: dict[str, None] = {}

    def walk(x: ast.Expr | None) -> None:
        if x is None:
            return
        if isinstance(x, ast.Variable):
            if not x.anonymous:
                out[x.name] = None
        elif isinstance(x, ast.Call):
            for a in x.args:
                walk(a)
        elif isinstance(x, (ast.ListExpr,)):
            for a in x.items:
                walk(a)
            walk(x.tail)
        elif isinstance(x, ast.ArrayExpr):
            for a in x.items:
                walk(a)
        elif isinstance(x, ast.Quote):
            walk(x.expr)
        elif isinstance(x, ast.Index):
            walk(x.base)
            for a in x.indices:
                walk(a)
        elif isinstance(x, (ast.Attr, ast.Member)):
            walk(x.base)
            if isinstance(x, ast.Member) and x.args:
                for a in x.args:
                    walk(a)
        elif isinstance(x, ast.Range):
            walk(x.lo)
            walk(x.step)
            walk(x.hi)
        elif isinstance(x, ast.AsPattern):
            walk(x.var)
            walk(x.pattern)
        elif isinstance(x, ast.Iterator):
            walk(x.pattern)
            walk(x.domain)
        elif isinstance(x, ast.Comprehension):
            walk(x.template)
            for c in x.clauses:
                walk(c)
        elif isinstance(x, ast.Foreach):
            for c in x.clauses:
                walk(c)
            walk(x.body)
        elif isinstance(x, ast.Assign):
            walk(x.target)
            walk(x.value)
        elif isinstance(x, ast.IfThenElse):
            for c, g in x.branches:
                walk(c)
                walk(g)
            walk(x.orelse)

    walk(e)
    return list(out)


def assigned(e: ast.Expr | None) -> set[str]:
    """Names that are targets of ``:=`` anywhere inside ``e``."""
    out: set[str] = set()

    def walk(x: ast.Expr | None) -> None:
        if x is None:
            return
        if isinstance(x, ast.Assign):
            out.add(x.target.name)
            walk(x.value)
        elif isinstance(x, ast.Call):
            for a in x.args:
                walk(a)
        elif isinstance(x, ast.Foreach):
            walk(x.body)
        elif isinstance(x, ast.IfThenElse):
            for c, g in x.branches:
                walk(c)
                walk(g)
            walk(x.orelse)

    walk(e)
    return out


def conj(goals: list[ast.Expr]) -> ast.Expr:
    goals = [g for g in goals if g != ast.TRUE]
    if not goals:
        return ast.TRUE
    out = goals[-1]
    for g in reversed(goals[:-1]):
        out = ast.Call(",", (g, out))
    return out


def flatten_conj(goal: ast.Expr) -> list[ast.Expr]:
    out: list[ast.Expr] = []
    stack = [goal]
    while stack:
        g = stack.pop()
        if isinstance(g, ast.Call) and g.name == "," and len(g.args) == 2:
            stack.append(g.args[1])
            stack.append(g.args[0])
        else:
            out.append(g)
    return out


def if_to_goal(e: ast.IfThenElse) -> ast.Expr:
    orelse: ast.Expr = e.orelse if e.orelse is not None else ast.TRUE
    for cond, then in reversed(e.branches):
        orelse = ast.Call(";", (ast.Call("->", (cond, then)), orelse))
    return orelse


class Lowerer:
    def __init__(self, program: ast.Program) -> None:
        self.program = program
        existing = [n for (n, _a) in program.predicates if n.startswith(LOOP_PREFIX)]
        self._loops = itertools.count(len(existing) + 1)
        self._names = itertools.count(1)
        self.generated: list[ast.PredicateDef] = []

    def fresh(self, base: str) -> str:
        return f"{base}#{next(self._names)}"

    # -- rules ---------------------------------------------------------------

    def lower_rule(self, rule: ast.SourceRule) -> ast.SourceRule:
        scope = Scope(seen=set(variables(rule.head)))
        cond = self.lower_goal(rule.cond, scope)
        body = self.lower_goal(rule.body, scope)
        ret = rule.return_expr
        if ret is not None:
            pre: list[ast.Expr] = []
            ret = self.expression(ret, scope, pre)
            if pre:
                body = conj([*flatten_conj(body), *pre])
        return ast.SourceRule(rule.head, cond, body, rule.kind, ret, rule.line, rule.col)

    # -- goals ----------------------------------------------------------------

    def lower_goal(self, goal: ast.Expr, scope: Scope) -> ast.Expr:
        if isinstance(goal, ast.IfThenElse):
            return self.lower_goal(if_to_goal(goal), scope)
        if isinstance(goal, ast.Foreach):
            return self.lower_foreach(goal, scope)
        if isinstance(goal, ast.Assign):
            pre: list[ast.Expr] = []
            value = self.expression(goal.value, scope, pre)
            name = goal.target.name
            if name in scope.seen:
                new = self.fresh(name)
                scope.renames[name] = new
            else:
                new = name
                scope.seen.add(name)
            scope.seen.add(new)
            return conj([*pre, ast.Call("=", (ast.Variable(new), value))])
        if isinstance(goal, ast.Call):
            name, args = goal.name, goal.args
            if name == "," and len(args) == 2:
                first = self.lower_goal(args[0], scope)
                return conj([first, self.lower_goal(args[1], scope)])
            if name == ";" and len(args) == 2:
                return self.lower_disjunction(goal, scope)
            if name == "->" and len(args) == 2:
                return self.lower_disjunction(ast.Call(";", (goal, ast.Symbol("fail"))), scope)
            if name in ("not", "\\+") and len(args) == 1:
                inner = self.lower_goal(args[0], scope.clone())
                return ast.Call(name, (inner,))
            if name in ("once", "findall_goal") and len(args) == 1:
                return ast.Call(name, (self.lower_goal(args[0], scope),))
        pre = []
        lowered = self.expression(goal, scope, pre)
        return conj([*pre, lowered])

    def lower_disjunction(self, goal: ast.Call, base: Scope) -> ast.Expr:
        left, right = goal.args
        branches: list[tuple[ast.Expr | None, ast.Expr, Scope]] = []
        if isinstance(left, ast.Call) and left.name == "->" and len(left.args) == 2:
            s = base.clone()
            cond = self.lower_goal(left.args[0], s)
            then = self.lower_goal(left.args[1], s)
            branches.append((cond, then, s))
        else:
            s = base.clone()
            branches.append((None, self.lower_goal(left, s), s))
        s = base.clone()
        branches.append((None, self.lower_goal(right, s), s))

        # variables renamed differently in the two branches get a merge name
        names = sorted({n for _c, _g, s in branches for n in s.renames if s.renames.get(n) != base.renames.get(n)})
        merged: dict[str, str] = {n: self.fresh(n) for n in names}
        finished: list[ast.Expr] = []
        for cond, g, s in branches:
            tails = [ast.Call("=", (ast.Variable(m), ast.Variable(s.current(n)))) for n, m in merged.items()]
            g = conj([g, *tails])
            finished.append(g if cond is None else ast.Call("->", (cond, g)))
        for _c, _g, s in branches:
            base.seen |= s.seen
        base.renames.update(merged)
        base.seen.update(merged.values())
        return ast.Call(";", (finished[0], finished[1]))

    # -- loops ----------------------------------------------------------------

    def lower_foreach(self, loop: ast.Foreach, scope: Scope) -> ast.Expr:
        clauses = list(loop.clauses)
        first = clauses[0]
        assert isinstance(first, ast.Iterator)
        j = 1
        while j < len(clauses) and not isinstance(clauses[j], ast.Iterator):
            j += 1
        conds, rest = clauses[1:j], clauses[j:]
        body: ast.Expr = loop.body
        if rest:
            body = ast.Foreach(tuple(rest), body)
        if conds:
            body = ast.IfThenElse(((conj(conds), body),), ast.TRUE)
        return self._single_loop(first, body, scope)

    def _single_loop(self, it: ast.Iterator, body: ast.Expr, scope: Scope) -> ast.Expr:
        pre: list[ast.Expr] = []
        domain = self.expression(it.domain, scope, pre)

        pattern_vars = set(variables(it.pattern))
        body_vars = variables(body)
        globals_ = [v for v in body_vars if v in scope.seen and v not in pattern_vars]
        accs = [v for v in globals_ if v in assigned(body)]
        plain = [v for v in globals_ if v not in accs]

        name = f"{LOOP_PREFIX}{next(self._loops)}"
        arity = 1 + len(plain) + 2 * len(accs)
        pred = ast.PredicateDef(name, arity)

        outs = [self.fresh(a) for a in accs]
        g_args = tuple(ast.Variable(v) for v in plain)
        in_args = tuple(ast.Variable(a) for a in accs)
        out_args = tuple(ast.Variable(o) for o in outs)

        done_body = conj([ast.Call("=", (o, i)) for o, i in zip(out_args, in_args)])
        pred.rules.append(
            ast.SourceRule(ast.Call(name, (ast.ListExpr(()), *g_args, *in_args, *out_args)), body=done_body)
        )

        elem_name = self.fresh("Elem")
        rest_name = self.fresh("Rest")
        if isinstance(it.pattern, ast.Variable) and not it.pattern.anonymous:
            elem: ast.Expr = it.pattern
            bind: list[ast.Expr] = []
        else:
            elem = ast.Variable(elem_name)
            bind = [ast.Call("=", (elem, it.pattern))]
        head = ast.Call(name, (ast.ListExpr((elem,), ast.Variable(rest_name)), *g_args, *in_args, *out_args))
        inner = Scope(seen={*plain, *accs, *pattern_vars, elem_name, rest_name, *outs})
        lowered_body = self.lower_goal(conj([*bind, body]), inner)
        recur = ast.Call(
            name,
            (
                ast.Variable(rest_name),
                *g_args,
                *(ast.Variable(inner.current(a)) for a in accs),
                *out_args,
            ),
        )
        pred.rules.append(ast.SourceRule(head, body=conj([lowered_body, recur])))
        self.generated.append(pred)

        new_names = [self.fresh(a) for a in accs]
        call = ast.Call(
            name,
            (
                ast.Call(ITER_FUNCTION, (domain,)),
                *(ast.Variable(scope.current(v)) for v in plain),
                *(ast.Variable(scope.current(a)) for a in accs),
                *(ast.Variable(n) for n in new_names),
            ),
        )
        for a, n in zip(accs, new_names):
            scope.renames[a] = n
            scope.seen.add(n)
        return conj([*pre, call])

    # -- expressions ----------------------------------------------------------

    def expression(self, e: ast.Expr, scope: Scope, pre: list[ast.Expr]) -> ast.Expr:
        """Rename variables and hoist comprehensions into goals appended to ``pre``."""
        out = self._expr(e, scope, pre)
        scope.seen.update(variables(out))
        return out

    def _expr(self, e: ast.Expr, scope: Scope, pre: list[ast.Expr]) -> ast.Expr:
        if isinstance(e, ast.Variable):
            return e if e.anonymous else ast.Variable(scope.current(e.name))
        if isinstance(e, ast.Comprehension):
            return self._comprehension(e, scope, pre)
        if isinstance(e, ast.Call):
            return ast.Call(e.name, tuple(self._expr(a, scope, pre) for a in e.args))
        if isinstance(e, ast.ListExpr):
            items = tuple(self._expr(a, scope, pre) for a in e.items)
            return ast.ListExpr(items, None if e.tail is None else self._expr(e.tail, scope, pre))
        if isinstance(e, ast.ArrayExpr):
            return ast.ArrayExpr(tuple(self._expr(a, scope, pre) for a in e.items))
        if isinstance(e, ast.Quote):
            return ast.Quote(self._expr(e.expr, scope, pre))
        if isinstance(e, ast.Index):
            return ast.Index(self._expr(e.base, scope, pre), tuple(self._expr(i, scope, pre) for i in e.indices))
        if isinstance(e, ast.Attr):
            return ast.Attr(self._expr(e.base, scope, pre), e.name)
        if isinstance(e, ast.Range):
            step = None if e.step is None else self._expr(e.step, scope, pre)
            return ast.Range(self._expr(e.lo, scope, pre), self._expr(e.hi, scope, pre), step)
        if isinstance(e, ast.AsPattern):
            return ast.AsPattern(ast.Variable(scope.current(e.var.name)), self._expr(e.pattern, scope, pre))
        if isinstance(e, (ast.Foreach, ast.Assign, ast.IfThenElse)):
            # a statement in argument position runs before the enclosing goal
            pre.append(self.lower_goal(e, scope))
            return ast.TRUE
        return e

    def _comprehension(self, e: ast.Comprehension, scope: Scope, pre: list[ast.Expr]) -> ast.Expr:
        acc = self.fresh("Acc")
        result = self.fresh("List")
        scope.seen.add(acc)
        pre.append(ast.Call("=", (ast.Variable(acc), ast.ListExpr(()))))
        loop = ast.Foreach(e.clauses, ast.Assign(ast.Variable(acc), ast.ListExpr((e.template,), ast.Variable(acc))))
        pre.append(self.lower_foreach(loop, scope))
        pre.append(ast.Call("=", (ast.Variable(result), ast.Call("reverse", (ast.Variable(scope.current(acc)),)))))
        scope.seen.add(result)
        return ast.Variable(result)


def lower_loops(program: ast.Program) -> ast.Program:
    """Return a new program with all loops and assignments lowered."""
    lowerer = Lowerer(program)
    out = ast.Program(imports=list(program.imports), qualifiers=list(program.qualifiers), filename=program.filename)
    for key, pred in program.predicates.items():
        out.predicates[key] = ast.PredicateDef(
            pred.name,
            pred.arity,
            [lowerer.lower_rule(r) for r in pred.rules],
            pred.tabled,
            pred.table_decl,
            pred.is_function,
        )
    for gen in lowerer.generated:
        out.predicates[gen.key] = gen
    if lowerer.generated:
        logger.debug("generated %d loop predicates", len(lowerer.generated))
    return out


def lower_query(goal: ast.Expr, program: ast.Program) -> tuple[ast.Expr, list[ast.PredicateDef]]:
    """Lower a query goal; generated loop predicates are returned for registration."""
    lowerer = Lowerer(program)
    lowered = lowerer.lower_goal(goal, Scope())
    return lowered, lowerer.generated
