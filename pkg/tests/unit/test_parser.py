"""Tests for tabulog.lang: parsing, printing and loop lowering."""

import pytest

SOURCE = """\
import cp.

p(X) => q(X).
q(1).
q(2) ?=> true.
r(X, Y), X > Y => Y = $f(X, -3).
len_of(L) = N => N = L.length.
table (+, -, min)
dist(A, B, D) ?=> edge(A, B, D).
s(N) = S => S = 0, foreach (I in 1..N) S := S + I end.
evens(L) = [X : X in L, X mod 2 == 0].
pick(X) => if X > 0 then Y = pos elseif X < 0 then Y = neg else Y = zero end, writeln(Y).
"""


def test_rule_kinds():
    from tabulog.lang import parse_program

    program = parse_program(SOURCE)
    preds = program.predicates
    assert preds[("p", 1)].rules[0].kind == "nonbacktrackable"
    assert preds[("q", 1)].rules[0].kind == "backtrackable"
    assert preds[("q", 1)].rules[1].kind == "backtrackable"
    assert preds[("len_of", 1)].is_function
    assert preds[("len_of", 1)].rules[0].kind == "function"
    assert program.imports == ["cp"]


def test_condition_is_split_from_head():
    from tabulog.lang import ast, parse_program

    rule = parse_program(SOURCE).predicates[("r", 2)].rules[0]
    assert rule.head == ast.Call("r", (ast.Variable("X"), ast.Variable("Y")))
    assert rule.cond == ast.Call(">", (ast.Variable("X"), ast.Variable("Y")))


def test_table_declaration_with_modes():
    from tabulog.lang import parse_program

    pred = parse_program(SOURCE).predicates[("dist", 3)]
    assert pred.tabled
    assert pred.table_decl.modes == ("+", "-", "min")


def test_plain_table_declaration():
    from tabulog.lang import parse_program

    pred = parse_program("table\nfib(0, F) => F = 0.").predicates[("fib", 2)]
    assert pred.tabled
    assert pred.table_decl is None


def test_dot_notation_is_rewritten():
    from tabulog.lang import ast, parse_goal

    goal = parse_goal("Y = L.delete(E), N = L.length")
    first, second = goal.args
    assert first.args[1] == ast.Call("delete", (ast.Variable("L"), ast.Variable("E")))
    assert second.args[1] == ast.Attr(ast.Variable("L"), "length")


def test_module_qualifier_is_dropped():
    from tabulog.lang import ast, parse_goal

    goal = parse_goal("X = math.abs(-2)")
    assert goal.args[1] == ast.Call("abs", (ast.IntLit(-2),))


def test_as_pattern_and_index():
    from tabulog.lang import ast, parse_expr

    assert parse_expr("V@[H|T]") == ast.AsPattern(
        ast.Variable("V"), ast.ListExpr((ast.Variable("H"),), ast.Variable("T"))
    )
    assert parse_expr("M[I, J]") == ast.Index(ast.Variable("M"), (ast.Variable("I"), ast.Variable("J")))


def test_disjunction_and_if_then_else():
    from tabulog.lang import ast, parse_program

    x, y = ast.Variable("X"), ast.Variable("Y")
    program = parse_program("p(X) => (X = 1 ; X = 2).\nq(X, Y) => (X > 0 -> Y = pos ; Y = neg).\n")
    p_body = program.predicates[("p", 1)].rules[0].body
    assert p_body == ast.Call(";", (ast.Call("=", (x, ast.IntLit(1))), ast.Call("=", (x, ast.IntLit(2)))))
    q_body = program.predicates[("q", 2)].rules[0].body
    assert q_body == ast.Call(
        ";",
        (
            ast.Call("->", (ast.Call(">", (x, ast.IntLit(0))), ast.Call("=", (y, ast.Symbol("pos"))))),
            ast.Call("=", (y, ast.Symbol("neg"))),
        ),
    )


def test_disjunction_runs_in_the_engine():
    from tabulog.engine import Engine
    from tabulog.terms import to_python

    e = Engine.from_source("p(X) => (X = 1 ; X = 2).\nq(X, Y) => (X > 0 -> Y = pos ; Y = neg).\n")
    assert [to_python(b["X"]) for b in e.query("p(X)")] == [1, 2]
    assert to_python(e.once("q(-3, Y)")["Y"]) == "neg"
    assert to_python(e.once("q(5, Y)")["Y"]) == "pos"


def test_printed_program_parses_back_to_the_same_tree():
    from tabulog.lang import format_program, parse_program

    program = parse_program(SOURCE)
    again = parse_program(format_program(program))
    assert again == program
    assert format_program(again) == format_program(program)


def test_lowering_removes_loops_and_assignments():
    from tabulog.lang import ast, lower_loops, parse_program

    lowered = lower_loops(parse_program(SOURCE))

    def walk(e):
        assert not isinstance(e, (ast.Foreach, ast.Comprehension, ast.Assign, ast.IfThenElse))
        if isinstance(e, ast.Call):
            for a in e.args:
                walk(a)
        elif isinstance(e, ast.ListExpr):
            for a in e.items:
                walk(a)
            if e.tail is not None:
                walk(e.tail)

    for pred in lowered.predicates.values():
        for rule in pred.rules:
            walk(rule.cond)
            walk(rule.body)
            if rule.return_expr is not None:
                walk(rule.return_expr)
    generated = [name for name, _ in lowered.predicates if name.startswith("$")]
    assert generated


def test_parse_error_location():
    from tabulog.errors import ParseError
    from tabulog.lang import parse_program

    with pytest.raises(ParseError) as exc:
        parse_program("p(X) => q(X) r.")
    assert exc.value.line == 1
    assert exc.value.col == 14
    assert str(exc.value).startswith("<string>:1:14: ")


def test_parse_error_reports_file_name():
    from tabulog.errors import ParseError
    from tabulog.lang import parse_program

    with pytest.raises(ParseError) as exc:
        parse_program("p(X) =>\n  q(X", "prog.pi")
    assert exc.value.file == "prog.pi"
    assert exc.value.line == 2


@pytest.mark.parametrize(
    "text",
    [
        "table (+, foo)\np(X, Y) => true.",
        "table (nt, +)\np(X, Y) => true.",
        "table (min, max)\np(X, Y) => true.",
        "table (+)\np(X, Y) => true.",
        "f(X) = Y ?=> Y = X.",
        "p(X) => X = 1.5.",
    ],
)
def test_malformed_programs_are_rejected(text):
    from tabulog.errors import ParseError
    from tabulog.lang import parse_program

    with pytest.raises(ParseError):
        parse_program(text)


def test_function_and_predicate_with_same_name_clash():
    from tabulog.errors import ParseError
    from tabulog.lang import parse_program

    with pytest.raises(ParseError):
        parse_program("f(X) = X.\nf(X) => true.")
