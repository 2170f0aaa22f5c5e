"""Tests for domains, the propagation store and backend-neutral models."""

import pytest
from hypothesis import given
from hypothesis import strategies as st


def test_domain_construction():
    from tabulog.solvers import Domain

    d = Domain.of([7, 1, 2, 3, 3])
    assert d.ivs == ((1, 3), (7, 7))
    assert d.size == len(d) == 4
    assert (d.min, d.max) == (1, 7)
    assert list(d) == [1, 2, 3, 7]
    assert repr(d) == "{1..3, 7}"
    assert Domain.interval(3, 2).empty
    assert Domain.value(4).fixed


def test_domain_narrowing():
    from tabulog.solvers import Domain

    d = Domain.interval(0, 9)
    assert d.remove(5).ivs == ((0, 4), (6, 9))
    assert d.remove(0).ivs == ((1, 9),)
    assert d.remove(42) is d
    assert d.restrict(lo=3, hi=4) == Domain.interval(3, 4)
    assert d.restrict(lo=-5) is d
    assert d.intersect(Domain.of([1, 5, 12])) == Domain.of([1, 5])
    assert d.keep([2, 3]) == Domain.interval(2, 3)
    assert 5 in d and 10 not in d


values = st.sets(st.integers(-20, 20), max_size=15)


@given(values, values)
def test_domain_operations_agree_with_sets(a, b):
    from tabulog.solvers import Domain

    da, db = Domain.of(a), Domain.of(b)
    assert list(da) == sorted(a)
    assert set(da.intersect(db)) == a & b
    for v in b:
        da = da.remove(v)
    assert set(da) == a - b
    # intervals stay disjoint and non-adjacent
    for (_, hi), (lo, _) in zip(da.ivs, da.ivs[1:]):
        assert lo > hi + 1


def test_store_propagates_linear_constraints():
    from tabulog.solvers import CpStore, Domain
    from tabulog.solvers.model import Op, Ref, Rel

    s = CpStore()
    x = s.new_var(Domain.interval(0, 10))
    y = s.new_var(Domain.interval(0, 10))
    assert s.post(Rel("#=", Op("+", (Ref(x), Ref(y))), 4))
    assert s.dom(x) == Domain.interval(0, 4)
    assert s.post(Rel("#>", Ref(x), 2))
    assert s.dom(x) == Domain.interval(3, 4)
    assert s.dom(y) == Domain.interval(0, 1)
    assert not s.post(Rel("#>", Ref(y), 5))


def test_store_undo_restores_domains_and_constraints():
    from tabulog.solvers import CpStore, Domain
    from tabulog.solvers.model import Ref, Rel

    s = CpStore()
    x = s.new_var(Domain.interval(0, 5))
    mark = s.mark()
    s.post(Rel("#<", Ref(x), 3))
    y = s.new_var(Domain.interval(0, 1))
    assert s.dom(x) == Domain.interval(0, 2)
    s.undo(mark)
    assert s.dom(x) == Domain.interval(0, 5)
    assert s.constraints == []
    assert len(s.doms) == y


def test_disequality_removes_values_once_fixed():
    from tabulog.solvers import CpStore, Domain
    from tabulog.solvers.model import Ref, Rel

    s = CpStore()
    x = s.new_var(Domain.interval(1, 3))
    y = s.new_var(Domain.interval(1, 3))
    s.post(Rel("#!=", Ref(x), Ref(y)))
    assert s.assign(x, 2)
    assert s.dom(y) == Domain.of([1, 3])


def test_label_enumerates_in_ascending_order():
    from tabulog.solvers import CpStore, Domain, label
    from tabulog.solvers.model import Ref, Rel

    s = CpStore()
    x = s.new_var(Domain.interval(1, 3))
    y = s.new_var(Domain.interval(1, 3))
    s.post(Rel("#<", Ref(x), Ref(y)))
    found = [(s.value(x), s.value(y)) for _ in label(s, [x, y])]
    assert found == [(1, 2), (1, 3), (2, 3)]
    assert s.dom(x) == Domain.interval(1, 2)


def test_first_fail_picks_the_smallest_domain():
    from tabulog.solvers import CpStore, Domain
    from tabulog.solvers.cp import select_var

    s = CpStore()
    a = s.new_var(Domain.interval(0, 9))
    b = s.new_var(Domain.interval(0, 2))
    c = s.new_var(Domain.value(1))
    assert select_var(s, [a, b, c], "ff") == b
    assert select_var(s, [a, b, c], "default") == a
    assert select_var(s, [c], "ff") is None


def test_optimize_finds_the_best_assignment():
    from tabulog.solvers import CpStore, Domain, optimize
    from tabulog.solvers.model import Op, Ref, Rel

    s = CpStore()
    x = s.new_var(Domain.interval(0, 5))
    y = s.new_var(Domain.interval(0, 5))
    s.post(Rel("#=<", Op("+", (Ref(x), Ref(y))), 6))
    s.post(Rel("#!=", Ref(x), Ref(y)))
    z = s.expr_var(Op("-", (Op("*", (2, Ref(x))), Ref(y))))
    found = [(s.value(x), s.value(y)) for _ in optimize(s, [x, y], z, "max")]
    assert found == [(5, 0)]


def test_reification_and_connectives():
    from tabulog.solvers import CpStore, Domain
    from tabulog.solvers.domain import BOOLEAN
    from tabulog.solvers.model import Conn, Ref, Rel

    s = CpStore()
    x = s.new_var(Domain.interval(0, 5))
    b = s.new_var(BOOLEAN)
    s.post(Conn("#<=>", (Ref(b), Rel("#>=", Ref(x), 3))))
    assert not s.is_fixed(b)
    mark = s.mark()
    s.assign(x, 4)
    assert s.value(b) == 1
    s.undo(mark)
    s.assign(b, 0)
    assert s.dom(x) == Domain.interval(0, 2)


def test_element_and_table():
    from tabulog.solvers import CpStore, Domain
    from tabulog.solvers.model import Element, Ref, Table

    s = CpStore()
    i = s.new_var(Domain.interval(0, 9))
    v = s.new_var(Domain.interval(15, 100))
    s.post(Element(Ref(i), (10, 20, 30), Ref(v)))
    assert s.dom(i) == Domain.interval(2, 3)
    assert s.dom(v) == Domain.of([20, 30])

    s = CpStore()
    x = s.new_var(Domain.interval(0, 5))
    y = s.new_var(Domain.interval(0, 5))
    s.post(Table((Ref(x), Ref(y)), ((1, 2), (2, 3), (4, 9))))
    assert s.dom(x) == Domain.interval(1, 2)
    assert s.dom(y) == Domain.interval(2, 3)


def test_store_snapshot_and_stats():
    from tabulog.solvers import CpStore, Domain
    from tabulog.solvers.model import Ref, Rel

    s = CpStore()
    x = s.new_var(Domain.interval(0, 5), "X")
    s.new_var(Domain.interval(0, 5), "Unused")
    s.post(Rel("#<", Ref(x), 2))
    model = s.model()
    assert model.domains == {x: Domain.interval(0, 1)}
    assert model.names == {x: "X"}
    assert model.constraints == [Rel("#<", Ref(x), 2)]
    stats = s.stats()
    assert set(stats) == {"cp_vars", "cp_propagators", "cp_propagations", "cp_choices", "cp_failures"}
    assert stats["cp_vars"] == 2


def test_unknown_functions_are_unsupported():
    from tabulog.errors import UnsupportedConstraint
    from tabulog.solvers import CpStore, Domain
    from tabulog.solvers.model import Op, Ref, Rel

    s = CpStore()
    x = s.new_var(Domain.interval(0, 5))
    with pytest.raises(UnsupportedConstraint):
        s.post(Rel("#=", Op("gcd", (Ref(x), 4)), 2))


def test_check_solution():
    from tabulog.solvers import ConstraintModel, Domain, check_solution
    from tabulog.solvers.model import AllDifferent, Element, Op, Rel

    model = ConstraintModel()
    x = model.new_var(Domain.interval(1, 3))
    y = model.new_var(Domain.of([2, 4]))
    model.post(AllDifferent((x, y)))
    model.post(Rel("#=", Op("mod", (Op("+", (x, y)), 3)), 0))
    model.post(Element(x, (5, 4, 6), Op("+", (y, 2))))
    assert check_solution(model, {0: 2, 1: 2}) is False
    assert check_solution(model, {0: 2, 1: 4}) is False
    assert check_solution(model, {0: 1, 1: 2}) is False
    assert check_solution(model, {0: 2}) is False
    assert check_solution(model, {0: 5, 1: 4}) is False
    model = ConstraintModel()
    x = model.new_var(Domain.interval(1, 3))
    y = model.new_var(Domain.of([2, 4]))
    model.post(Element(x, (5, 4, 6), Op("+", (y, 2))))
    assert check_solution(model, {0: 3, 1: 4})


def test_model_arithmetic_floors():
    from tabulog.solvers.model import Op, evaluate

    assert evaluate(Op("div", (-7, 2)), {}) == -4
    assert evaluate(Op("mod", (-7, 2)), {}) == 1
    assert evaluate(Op("min", (3, Op("abs", (-5,)))), {}) == 3


def test_exhaustive_solutions_refuse_large_boxes():
    from tabulog.errors import CheckerRefused
    from tabulog.solvers import ConstraintModel, Domain, solutions
    from tabulog.solvers.model import box_size

    model = ConstraintModel()
    for _ in range(3):
        model.new_var(Domain.interval(0, 99))
    assert box_size(model) == 10**6
    with pytest.raises(CheckerRefused):
        list(solutions(model, limit=1000))


def test_backend_selection():
    from tabulog.config import Settings
    from tabulog.errors import UnsupportedConstraint
    from tabulog.solvers import select_backend
    from tabulog.solvers.dispatch import backend_from_imports

    assert select_backend(None, "sat", "mip") == "sat"
    assert select_backend(None, None, settings=Settings(default_backend="mip")) == "mip"
    assert backend_from_imports(["cp", "planner", "sat"]) == "sat"
    assert backend_from_imports(["planner"]) is None
    with pytest.raises(UnsupportedConstraint):
        select_backend("gurobi")
