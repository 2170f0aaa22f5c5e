"""Pretty printer for the surface syntax tree.

Operator applications are always parenthesized, so printed text parses back
to an equal tree.
"""

from __future__ import annotations

from tabulog.lang import ast
from tabulog.lang.parser import INFIX, KEYWORDS, PREFIX, WORD_INFIX
from tabulog.terms.ops import format_atom

_RESERVED = KEYWORDS | WORD_INFIX | {"if", "foreach", "table", "import", "not"}


def format_name(name: str) -> str:
    if name in _RESERVED:
        return f"'{name}'"
    return format_atom(name)


def _string(value: str) -> str:
    escaped = value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{escaped}"'


def format_expr(e: ast.Expr) -> str:
    if isinstance(e, ast.Variable):
        return e.name
    if isinstance(e, ast.Symbol):
        return format_name(e.name)
    if isinstance(e, ast.IntLit):
        return f"({e.value})" if e.value < 0 else str(e.value)
    if isinstance(e, ast.StrLit):
        return _string(e.value)
    if isinstance(e, ast.ListExpr):
        items = ", ".join(format_expr(i) for i in e.items)
        if e.tail is not None:
            return f"[{items} | {format_expr(e.tail)}]"
        return f"[{items}]"
    if isinstance(e, ast.ArrayExpr):
        return "{" + ", ".join(format_expr(i) for i in e.items) + "}"
    if isinstance(e, ast.Call):
        if len(e.args) == 2 and e.name in INFIX:
            return f"({format_expr(e.args[0])} {e.name} {format_expr(e.args[1])})"
        if len(e.args) == 1 and e.name in PREFIX:
            return f"{e.name}({format_expr(e.args[0])})"
        return f"{format_name(e.name)}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, ast.Quote):
        return f"$({format_expr(e.expr)})"
    if isinstance(e, ast.Index):
        return f"{format_expr(e.base)}[{', '.join(format_expr(i) for i in e.indices)}]"
    if isinstance(e, ast.Attr):
        return f"{format_expr(e.base)}.{e.name}"
    if isinstance(e, ast.Member):
        suffix = "" if e.args is None else f"({', '.join(format_expr(a) for a in e.args)})"
        return f"{format_expr(e.base)}.{e.name}{suffix}"
    if isinstance(e, ast.Range):
        if e.step is None:
            return f"({format_expr(e.lo)} .. {format_expr(e.hi)})"
        return f"({format_expr(e.lo)} .. {format_expr(e.step)} .. {format_expr(e.hi)})"
    if isinstance(e, ast.AsPattern):
        return f"{e.var.name}@{format_expr(e.pattern)}"
    if isinstance(e, ast.Iterator):
        return f"{format_expr(e.pattern)} in {format_expr(e.domain)}"
    if isinstance(e, ast.Comprehension):
        return f"[{format_expr(e.template)} : {', '.join(format_expr(c) for c in e.clauses)}]"
    if isinstance(e, ast.Foreach):
        clauses = ", ".join(format_expr(c) for c in e.clauses)
        return f"foreach ({clauses}) {format_expr(e.body)} end"
    if isinstance(e, ast.Assign):
        return f"({e.target.name} := {format_expr(e.value)})"
    if isinstance(e, ast.IfThenElse):
        parts = []
        for i, (cond, then) in enumerate(e.branches):
            parts.append(f"{'if' if i == 0 else 'elseif'} {format_expr(cond)} then {format_expr(then)}")
        if e.orelse is not None:
            parts.append(f"else {format_expr(e.orelse)}")
        return " ".join(parts) + " end"
    raise TypeError(f"cannot format {e!r}")


def format_rule(rule: ast.SourceRule) -> str:
    head = format_expr(rule.head)
    has_cond = rule.cond != ast.TRUE
    has_body = rule.body != ast.TRUE
    if rule.kind == "function":
        lhs = f"{head} = {format_expr(rule.return_expr or ast.TRUE)}"
        if has_cond:
            lhs += f", {format_expr(rule.cond)}"
        if not has_cond and not has_body:
            return f"{lhs}."
        return f"{lhs} => {format_expr(rule.body)}."
    lhs = head + (f", {format_expr(rule.cond)}" if has_cond else "")
    if rule.kind == "backtrackable":
        if not has_cond and not has_body:
            return f"{lhs}."
        return f"{lhs} ?=> {format_expr(rule.body)}."
    return f"{lhs} => {format_expr(rule.body)}."


def format_program(program: ast.Program) -> str:
    lines: list[str] = []
    if program.imports:
        lines.append(f"import {', '.join(program.imports)}.")
        lines.append("")
    for pred in program.predicates.values():
        if pred.tabled:
            if pred.table_decl is None:
                lines.append("table")
            else:
                lines.append(f"table({','.join(pred.table_decl.modes)})")
        for rule in pred.rules:
            lines.append(format_rule(rule))
        lines.append("")
    return "\n".join(lines)
