"""Integer arithmetic evaluation."""

from __future__ import annotations

from collections.abc import Callable

from tabulog.errors import EvaluationError, InstantiationError, TermTypeError
from tabulog.terms.ops import deref, format_term
from tabulog.terms.types import Struct, Term, Var


def _div_exact(a: int, b: int) -> int:
    if a % b:
        raise EvaluationError(f"{a}/{b} is not an integer (floats are not supported)")
    return a // b


def _trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _rem(a: int, b: int) -> int:
    return a - b * _trunc_div(a, b)


def _power(a: int, b: int) -> int:
    if b < 0:
        raise EvaluationError(f"negative exponent in {a}**{b}")
    return a**b


def _sign(a: int) -> int:
    return (a > 0) - (a < 0)


BINARY: dict[str, Callable[[int, int], int]] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _div_exact,
    "//": _trunc_div,
    "div": lambda a, b: a // b,
    "mod": lambda a, b: a % b,
    "rem": _rem,
    "**": _power,
    "min": min,
    "max": max,
    "/\\": lambda a, b: a & b,
    "\\/": lambda a, b: a | b,
}

UNARY: dict[str, Callable[[int], int]] = {
    "-": lambda a: -a,
    "+": lambda a: a,
    "abs": abs,
    "sign": _sign,
}

_DIVISIONS = {"/", "//", "div", "mod", "rem"}


def evaluate(t: Term) -> int:
    t = deref(t)
    if type(t) is int:
        return t
    if type(t) is Var:
        raise InstantiationError("arithmetic on an unbound variable", t)
    if type(t) is Struct:
        args = t.args
        if len(args) == 2:
            op2 = BINARY.get(t.name)
            if op2 is not None:
                a = evaluate(args[0])
                b = evaluate(args[1])
                if b == 0 and t.name in _DIVISIONS:
                    raise EvaluationError(f"division by zero in {format_term(t)}", t)
                return op2(a, b)
        elif len(args) == 1:
            op1 = UNARY.get(t.name)
            if op1 is not None:
                return op1(evaluate(args[0]))
    raise TermTypeError(f"not an arithmetic expression: {format_term(t)}", t)


def compare(op: str, a: Term, b: Term) -> bool:
    x = evaluate(a)
    y = evaluate(b)
    if op == "<":
        return x < y
    if op == ">":
        return x > y
    if op == "=<":
        return x <= y
    if op == ">=":
        return x >= y
    if op == "=:=":
        return x == y
    return x != y
