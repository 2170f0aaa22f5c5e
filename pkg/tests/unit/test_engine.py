"""Tests for the execution engine: matching, commitment, choice points and builtins."""

import io

import pytest


def make_engine(text, **kwargs):
    from tabulog.engine import Engine

    return Engine.from_source(text, **kwargs)


def values(engine, goal, name):
    from tabulog.terms import to_python

    return [to_python(s[name]) for s in engine.query(goal)]


def test_member_enumerates_elements_in_order():
    e = make_engine("")
    assert values(e, "member(X, [1, 2, 3])", "X") == [1, 2, 3]


def test_member_unifies_rather_than_matches():
    e = make_engine("")
    sols = list(e.query("member($f(X), [$f(1), $g(2), $f(3)])"))
    assert [s["X"] for s in sols] == [1, 3]


def test_select_removes_each_element_once():
    from tabulog.terms import to_python

    e = make_engine("")
    sols = [(to_python(s["X"]), to_python(s["R"])) for s in e.query("select(X, [1, 2, 3], R)")]
    assert sols == [(1, [2, 3]), (2, [1, 3]), (3, [1, 2])]


def test_nonlinear_head_requires_identical_arguments():
    e = make_engine("same(X, X) => true.")
    assert e.once("same(1, 1)") is not None
    assert e.once("same($f(a), $f(a))") is not None
    assert e.once("same(1, 2)") is None


def test_matching_never_binds_call_variables():
    e = make_engine("p(a) => true.\nsame(X, X) => true.")
    # an insufficiently instantiated call fails instead of waiting
    assert list(e.query("p(X)")) == []
    assert list(e.query("same(A, 1)")) == []
    assert e.once("same(A, A)") is not None


def test_facts_unify_with_the_call():
    e = make_engine("edge(1, 2).\nedge(1, 3).\nedge(2, 3).\nsame(X, X).\nbox(f(_, b)).")
    assert values(e, "edge(1, Y)", "Y") == [2, 3]
    assert values(e, "edge(X, 3)", "X") == [1, 2]
    assert len(list(e.query("edge(A, B)"))) == 3
    assert values(e, "same(Z, 4)", "Z") == [4]
    assert e.once("box($f(1, Q))")["Q"].name == "b"
    assert e.once("edge(3, _)") is None


def test_commitment_discards_later_rules():
    e = make_engine("c(X) => X = 1.\nc(X) => X = 2.\nd(X) => fail.\nd(X) => true.")
    assert values(e, "c(X)", "X") == [1]
    assert e.once("d(1)") is None


def test_backtrackable_rule_leaves_a_choice_point():
    e = make_engine("b(X) ?=> X = 1.\nb(X) ?=> X = 2.\nb(X) => X = 3.")
    assert values(e, "b(X)", "X") == [1, 2, 3]


def test_failed_condition_tries_the_next_rule():
    e = make_engine("sign(X, S), X < 0 => S = neg.\nsign(X, S), X > 0 => S = pos.\nsign(_, S) => S = zero.")
    assert values(e, "sign(-4, S)", "S") == ["neg"]
    assert values(e, "sign(4, S)", "S") == ["pos"]
    assert values(e, "sign(0, S)", "S") == ["zero"]


def test_unresolved_function_call():
    from tabulog.errors import UnresolvedFunctionCall

    e = make_engine("f(1) = a.")
    assert values(e, "X = f(1)", "X") == ["a"]
    with pytest.raises(UnresolvedFunctionCall) as exc:
        e.once("X = f(2)")
    assert exc.value.kind == "unresolved_function_call"
    with pytest.raises(UnresolvedFunctionCall):
        e.once("X = no_such_function(2)")


def test_unknown_predicate():
    from tabulog.errors import UnknownPredicate

    e = make_engine("")
    with pytest.raises(UnknownPredicate):
        e.once("no_such_predicate(1)")


def test_functions_compose_and_evaluate_arguments():
    e = make_engine("fact(0) = 1.\nfact(N) = N * fact(N - 1).")
    assert values(e, "X = fact(10)", "X") == [3628800]


def test_integer_arithmetic():
    e = make_engine("")
    sol = e.once("A = 7 // 2, B = -7 // 2, C = -7 div 2, D = 7 mod 3, E = -7 rem 2, F = 2 ** 10, G = 6 / 3")
    assert (sol["A"], sol["B"], sol["C"], sol["D"], sol["E"], sol["F"], sol["G"]) == (3, -3, -4, 1, -1, 1024, 2)


def test_arithmetic_errors():
    from tabulog.errors import EvaluationError, InstantiationError

    e = make_engine("")
    with pytest.raises(EvaluationError):
        e.once("X = 1 // 0")
    with pytest.raises(EvaluationError):
        e.once("X = 7 / 2")
    with pytest.raises(InstantiationError):
        e.once("Y < 3")


def test_if_then_else_and_negation():
    e = make_engine("")
    assert values(e, "(1 > 2 -> X = a ; X = b)", "X") == ["b"]
    assert e.once("not member(4, [1, 2, 3])") is not None
    assert e.once("\\+ member(2, [1, 2, 3])") is None


def test_findall_collects_every_solution():
    e = make_engine("")
    assert values(e, "L = findall(X, member(X, [3, 1, 2]))", "L") == [[3, 1, 2]]
    assert len(values(e, "findall(X-Y, (member(X, [1, 2]), member(Y, [a, b])), L)", "L")[0]) == 4


def test_list_comprehension_and_foreach():
    e = make_engine(
        "squares(N) = [I * I : I in 1..N].\n"
        "total(L) = S => S = 0, foreach (X in L) S := S + X end.\n"
        "odd_sum(N) = S => S = 0, foreach (I in 1..N, I mod 2 == 1) S := S + I end.\n"
    )
    assert values(e, "L = squares(4)", "L") == [[1, 4, 9, 16]]
    assert values(e, "S = total([4, 5, 6])", "S") == [15]
    assert values(e, "S = odd_sum(10)", "S") == [25]


def test_nested_foreach_with_accumulator():
    e = make_engine("pairs(N) = C => C = 0, foreach (I in 1..N, J in I..N) C := C + 1 end.")
    assert values(e, "C = pairs(4)", "C") == [10]


def test_index_and_attribute_access():
    from tabulog.errors import TermIndexError

    e = make_engine("")
    sol = e.once("A = {10, 20, 30}, X = A[2], N = A.length, M = {{1, 2}, {3, 4}}, Y = M[2, 1]")
    assert (sol["X"], sol["N"], sol["Y"]) == (20, 3, 3)
    with pytest.raises(TermIndexError):
        e.once("L = [1, 2], X = L[3]")


def test_as_pattern_names_the_matched_term():
    e = make_engine("first(L@[H|_]) = [H, L].")
    assert values(e, "X = first([1, 2])", "X") == [[1, [1, 2]]]


def test_throw_raises_user_error():
    from tabulog.errors import UserError

    e = make_engine("")
    with pytest.raises(UserError):
        e.once("throw(oops)")


def test_writeln_goes_to_the_engine_output():
    out = io.StringIO()
    e = make_engine("main => writeln(hello), writeln([1, 2]), writeln(\"text\").", out=out)
    assert e.once("main") is not None
    assert out.getvalue() == "hello\n[1,2]\ntext\n"


def test_bindings_are_undone_after_a_query():
    e = make_engine("")
    list(e.query("member(X, [1, 2])"))
    assert e.trail == []


def test_long_recursion_does_not_exhaust_the_python_stack():
    e = make_engine("count(0) => true.\ncount(N) => count(N - 1).\nlen([], N) => N = 0.\nlen([_|T], N) => len(T, M), N = M + 1.")
    assert e.once("count(100000)") is not None
    assert values(e, "L = 1..5000, len(L, N)", "N") == [5000]


def test_cyclic_bindings_are_returned_and_printable():
    from tabulog.errors import TermTypeError
    from tabulog.terms.ops import format_term

    e = make_engine("")
    bindings = next(e.query("X = $f(X)"))
    assert format_term(bindings["X"]) == "f(f(...))"
    with pytest.raises(TermTypeError, match="cyclic"):
        e.once("findall(X, X = $f(X), L)")


def test_engine_counts_calls_and_backtracks():
    e = make_engine("b(X) ?=> X = 1.\nb(X) => X = 2.")
    list(e.query("b(X), X > 1"))
    stats = e.stats()
    assert stats["calls"] >= 1
    assert stats["backtracks"] >= 1


def test_loops_program(programs_dir):
    from tabulog.engine import Engine

    out = io.StringIO()
    e = Engine.from_file(programs_dir / "loops.pi", out=out)
    assert e.once("main") is not None
    lines = out.getvalue().splitlines()
    assert lines[0] == "[[],[3],[2],[2,3],[1],[1,3],[1,2],[1,2,3]]"
    assert lines[1] == "[[1,2,3],[1,3,2],[2,1,3],[2,3,1],[3,1,2],[3,2,1]]"
    assert lines[2] == "{{19,22},{43,50}}"
