"""Tests for tabled evaluation: variant tables, looping calls and answer modes."""

import io
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

FIB = """
table
fib(0, F) => F = 0.
fib(1, F) => F = 1.
fib(N, F), N > 1 => fib(N - 1, F1), fib(N - 2, F2), F = F1 + F2.
"""

GRAPH = """
edge(1, 2).
edge(2, 3).
edge(3, 1).
edge(3, 4).
"""


def make_engine(text, **kwargs):
    from tabulog.engine import Engine

    return Engine.from_source(text, **kwargs)


def values(engine, goal, name):
    from tabulog.terms import to_python

    return [to_python(s[name]) for s in engine.query(goal)]


def test_fib_evaluates_each_key_once():
    e = make_engine(FIB)
    assert values(e, "fib(30, F)", "F") == [832040]
    stats = e.tables.stats()["fib/2"]
    assert stats["keys"] == 31
    assert stats["producer_iterations"] == 31
    assert stats["completed"] == 31
    assert stats["hits"] > 0


def test_completed_table_answers_without_reevaluation():
    e = make_engine(FIB)
    e.once("fib(20, _)")
    before = e.tables.stats()["fib/2"]["producer_iterations"]
    assert values(e, "fib(15, F)", "F") == [610]
    assert e.tables.stats()["fib/2"]["producer_iterations"] == before


def test_reachability_on_a_cyclic_graph_terminates():
    e = make_engine(GRAPH + "table\nreach(X, Y) ?=> edge(X, Y).\nreach(X, Y) => edge(X, Z), reach(Z, Y).\n")
    assert sorted(values(e, "reach(1, Y)", "Y")) == [1, 2, 3, 4]
    assert sorted(values(e, "reach(4, Y)", "Y")) == []


def test_left_recursion_terminates():
    e = make_engine(GRAPH + "table\npath(X, Y) ?=> path(X, Z), edge(Z, Y).\npath(X, Y) => edge(X, Y).\n")
    assert sorted(values(e, "path(2, Y)", "Y")) == [1, 2, 3, 4]
    stats = e.tables.stats()["path/2"]
    assert stats["producer_iterations"] >= 2
    assert stats["completed"] == 1


def test_min_mode_keeps_the_shortest_distance():
    e = make_engine(
        """
        edge(a, b, 1).
        edge(b, a, 1).
        edge(a, c, 4).
        edge(b, c, 1).
        edge(c, d, 1).
        table (+, +, min)
        sp(X, Y, D), X == Y => D = 0.
        sp(X, Y, D) => edge(X, Z, W), sp(Z, Y, D1), D = D1 + W.
        """
    )
    assert values(e, "sp(a, d, D)", "D") == [3]
    assert values(e, "sp(b, d, D)", "D") == [2]
    assert values(e, "sp(d, a, D)", "D") == []


def test_min_mode_agrees_with_dijkstra_on_random_graphs():
    import heapq

    rng = random.Random(7)
    for _ in range(5):
        n = 6
        edges = {}
        for _ in range(12):
            a, b = rng.randrange(n), rng.randrange(n)
            if a != b:
                edges[(a, b)] = rng.randint(1, 5)
        facts = "".join(f"edge({a}, {b}, {w}).\n" for (a, b), w in sorted(edges.items()))
        e = make_engine(
            facts
            + "table (+, +, min)\n"
            + "sp(X, Y, D), X == Y => D = 0.\n"
            + "sp(X, Y, D) => edge(X, Z, W), sp(Z, Y, D1), D = D1 + W.\n"
        )
        dist = {0: 0}
        heap = [(0, 0)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist.get(u, d):
                continue
            for (a, b), w in edges.items():
                if a == u and d + w < dist.get(b, 10**9):
                    dist[b] = d + w
                    heapq.heappush(heap, (d + w, b))
        for target in range(n):
            expected = [dist[target]] if target in dist else []
            assert values(e, f"sp(0, {target}, D)", "D") == expected


def test_triangle_program(programs_dir):
    from tabulog.engine import Engine

    out = io.StringIO()
    e = Engine.from_file(programs_dir / "triangle.pi", out=out)
    assert e.once("main") is not None
    assert out.getvalue() == "23\n"
    # the triangle argument is nt: four rows give ten keys
    assert e.tables.stats()["path/4"]["keys"] == 10


def test_large_triangle_matches_dynamic_programming(programs_dir):
    rng = random.Random(2024)
    rows = [[rng.randint(0, 99) for _ in range(r + 1)] for r in range(100)]
    best = list(rows[-1])
    for row in reversed(rows[:-1]):
        best = [v + max(best[i], best[i + 1]) for i, v in enumerate(row)]

    source = (programs_dir / "triangle.pi").read_text()
    literal = "{" + ", ".join("{" + ", ".join(map(str, r)) + "}" for r in rows) + "}"
    source = source.replace("{{3}, {7, 4}, {2, 4, 6}, {8, 5, 9, 3}}", literal)
    out = io.StringIO()
    e = make_engine(source, out=out)
    assert e.once("main") is not None
    assert out.getvalue() == f"{best[0]}\n"


def test_input_arguments_must_be_ground():
    from tabulog.errors import InstantiationError

    e = make_engine("table (+, -)\nsq(X, Y) => Y = X * X.")
    assert values(e, "sq(7, Y)", "Y") == [49]
    with pytest.raises(InstantiationError):
        e.once("sq(_, Y)")


def test_optimized_argument_must_be_an_integer():
    from tabulog.errors import TermTypeError

    e = make_engine("table (+, max)\nbad(X, Y) => Y = $f(X).")
    with pytest.raises(TermTypeError):
        e.once("bad(1, Y)")


def test_clear_drops_every_table():
    e = make_engine(FIB)
    e.once("fib(10, _)")
    e.tables.clear()
    assert e.tables.stats() == {}
    assert values(e, "fib(10, F)", "F") == [55]
    assert e.tables.stats()["fib/2"]["keys"] == 11


def test_clear_is_refused_during_evaluation():
    from tabulog.errors import ContractError
    from tabulog.tabling import AnswerTable
    from tabulog.terms import Atom

    e = make_engine(FIB)
    e.tables.stack.append(AnswerTable("fib/2", Atom("fib")))
    with pytest.raises(ContractError):
        e.tables.clear()


def test_plain_answers_are_deduplicated_in_order():
    from tabulog.tabling import AnswerTable
    from tabulog.terms import Atom

    table = AnswerTable("p/1", Atom("p"))
    assert table.update(1)
    assert table.update(2)
    assert not table.update(1)
    assert table.answers == [1, 2]


@given(st.sampled_from(["min", "max"]), st.lists(st.integers(-50, 50), min_size=1, max_size=30))
def test_optimized_answer_never_gets_worse(mode, values_seen):
    from tabulog.tabling import AnswerTable
    from tabulog.terms import Atom

    table = AnswerTable("p/2", Atom("p"), optimize=mode)
    pick = min if mode == "min" else max
    for i, v in enumerate(values_seen):
        previous = table.best
        changed = table.update(v, v)
        if previous is None:
            assert changed
        else:
            assert changed == (pick(previous, v) != previous)
        assert table.best == pick(values_seen[: i + 1])
        assert table.answers == [table.best]
