"""Tests for the SAT backend: gates, DIMACS files, the bundled solver and the log encoding."""

import itertools
import random

import pytest


def lit_true(model, lit):
    return model[lit] if lit > 0 else not model[-lit]


def force(lit, value):
    return [lit if value else -lit]


def test_gates_compute_their_truth_tables():
    from tabulog.solvers.sat import Cnf, solve_cnf

    for name, fn in [
        ("and", lambda a, b: a and b),
        ("or", lambda a, b: a or b),
        ("xor", lambda a, b: a != b),
        ("equiv", lambda a, b: a == b),
        ("implies", lambda a, b: (not a) or b),
    ]:
        cnf = Cnf()
        a, b = cnf.new_var(), cnf.new_var()
        if name in ("and", "or"):
            out = getattr(cnf, f"{name}_gate")([a, b])
        else:
            out = getattr(cnf, f"{name}_gate")(a, b)
        for va, vb in itertools.product([False, True], repeat=2):
            model = solve_cnf(cnf.num_vars, [*cnf.clauses, force(a, va), force(b, vb)])
            assert model is not None
            assert lit_true(model, out) == fn(va, vb), (name, va, vb)


def test_majority_gate():
    from tabulog.solvers.sat import Cnf, solve_cnf

    cnf = Cnf()
    a, b, c = cnf.new_var(), cnf.new_var(), cnf.new_var()
    out = cnf.majority(a, b, c)
    for bits in itertools.product([False, True], repeat=3):
        units = [force(lit, v) for lit, v in zip((a, b, c), bits)]
        model = solve_cnf(cnf.num_vars, [*cnf.clauses, *units])
        assert model is not None
        assert lit_true(model, out) == (sum(bits) >= 2)
    assert cnf.majority(a, cnf.false, cnf.true) == a
    assert cnf.majority(a, a, c) == a


def test_gates_fold_constants():
    from tabulog.solvers.sat import Cnf

    cnf = Cnf()
    a = cnf.new_var()
    before = len(cnf.clauses)
    assert cnf.and_gate([a, cnf.false]) == cnf.false
    assert cnf.and_gate([a, cnf.true]) == a
    assert cnf.or_gate([a, cnf.true]) == cnf.true
    assert cnf.xor_gate(a, cnf.true) == -a
    assert cnf.xor_gate(a, a) == cnf.false
    assert len(cnf.clauses) == before


def test_comparator_and_adder_circuits():
    from tabulog.solvers.sat import Cnf, solve_cnf

    cnf = Cnf()
    xs = [cnf.new_var() for _ in range(3)]
    ys = [cnf.new_var() for _ in range(3)]
    gt = cnf.greater_unsigned(xs, ys)
    total, carry = cnf.add_bits(cnf.pad(xs, 4), cnf.pad(ys, 4))
    for x, y in itertools.product(range(8), repeat=2):
        units = [force(b, (x >> i) & 1) for i, b in enumerate(xs)]
        units += [force(b, (y >> i) & 1) for i, b in enumerate(ys)]
        model = solve_cnf(cnf.num_vars, [*cnf.clauses, *units])
        assert model is not None
        assert lit_true(model, gt) == (x > y)
        assert sum(1 << i for i, s in enumerate(total) if lit_true(model, s)) == x + y


def test_dimacs_round_trip(tmp_path):
    from tabulog.solvers.sat import Cnf, parse_dimacs

    cnf = Cnf()
    a, b, c = cnf.new_var(), cnf.new_var(), cnf.new_var()
    cnf.add([a, -b])
    cnf.add([b, c, -a])
    cnf.add([cnf.false])
    path = tmp_path / "f.cnf"
    cnf.write_dimacs(path)
    text = path.read_text()
    assert text.splitlines()[0] == f"p cnf {cnf.num_vars} {len(cnf.clauses)}"
    assert parse_dimacs(text) == (cnf.num_vars, cnf.clauses)


def test_dimacs_rejects_unallocated_literals():
    from tabulog.errors import ContractError
    from tabulog.solvers.sat import Cnf

    cnf = Cnf()
    cnf.clauses.append([cnf.num_vars + 1])
    with pytest.raises(ContractError):
        cnf.to_dimacs()


def test_pigeonhole_is_unsatisfiable():
    from tabulog.solvers.sat import solve_cnf

    # three pigeons, two holes; var(p, h) = 2 * p + h + 1
    def var(p, h):
        return 2 * p + h + 1

    clauses = [[var(p, 0), var(p, 1)] for p in range(3)]
    for h in range(2):
        for p, q in itertools.combinations(range(3), 2):
            clauses.append([-var(p, h), -var(q, h)])
    for learning in (True, False):
        assert solve_cnf(6, clauses, learning=learning) is None


@pytest.mark.parametrize("learning", [True, False])
def test_solver_agrees_with_brute_force(learning):
    from tabulog.solvers.sat import solve_cnf

    rng = random.Random(3)
    for _ in range(60):
        n = 6
        clauses = [
            [rng.choice([1, -1]) * v for v in rng.sample(range(1, n + 1), 3)] for _ in range(rng.randint(5, 30))
        ]
        brute = any(
            all(any((lit > 0) == bits[abs(lit) - 1] for lit in clause) for clause in clauses)
            for bits in itertools.product([False, True], repeat=n)
        )
        model = solve_cnf(n, clauses, learning=learning, seed=rng.randrange(100))
        assert (model is not None) == brute
        if model is not None:
            assert all(any(lit_true(model, lit) for lit in clause) for clause in clauses)


def test_solver_is_incremental():
    from tabulog.solvers.sat import Solver

    solver = Solver(2)
    assert solver.add_clause([1, 2])
    seen = set()
    while solver.solve():
        m = solver.model()
        seen.add((m[1], m[2]))
        if not solver.add_clause([-1 if m[1] else 1, -2 if m[2] else 2]):
            break
    assert seen == {(True, False), (False, True), (True, True)}


def test_preferred_variables_are_decided_first():
    from tabulog.solvers.sat import Solver

    solver = Solver(6, seed=3)
    solver.prefer([5, -2])
    assert solver.add_clause([1, 3, 4])
    assert solver.solve()
    decided = [abs(solver.trail[i]) for i in solver.trail_lim]
    assert sorted(decided[:2]) == [2, 5]


def test_bit_count():
    from tabulog.solvers.sat import bit_count

    assert [bit_count(n) for n in (0, 1, 2, 3, 4, 7, 8, 255, 256)] == [0, 1, 2, 2, 3, 3, 4, 8, 9]


def test_domains_with_holes_and_negatives():
    from tabulog.solvers import ConstraintModel, Domain, sat_solutions

    model = ConstraintModel()
    model.new_var(Domain.of([-3, 0, 2, 5]))
    assert sorted(s[0] for s in sat_solutions(model)) == [-3, 0, 2, 5]


def test_single_value_and_zero_width_domains():
    from tabulog.solvers import ConstraintModel, Domain, sat_solutions
    from tabulog.solvers.model import Rel

    model = ConstraintModel()
    x = model.new_var(Domain.value(0))
    y = model.new_var(Domain.interval(-1, 1))
    model.post(Rel("#<", x, y))
    assert list(sat_solutions(model)) == [{0: 0, 1: 1}]


def random_model(rng):
    from tabulog.solvers import ConstraintModel, Domain
    from tabulog.solvers.model import AllDifferent, Conn, Element, Op, Rel, Table

    model = ConstraintModel()
    refs = []
    for _ in range(rng.randint(1, 3)):
        lo = rng.randint(-3, 2)
        values = [v for v in range(lo, lo + rng.randint(1, 4)) if rng.random() < 0.85] or [lo]
        refs.append(model.new_var(Domain.of(values)))

    def linear():
        e = rng.choice([*refs, rng.randint(-2, 2)])
        for _ in range(rng.randint(0, 2)):
            term = rng.choice(refs)
            k = rng.randint(-2, 2)
            if k not in (0, 1):
                term = Op("*", (k, term))
            e = Op(rng.choice(["+", "-"]), (e, term))
        if rng.random() < 0.2:
            e = Op("neg", (e,))
        return e

    def relation():
        return Rel(rng.choice(["#=", "#!=", "#<", "#=<", "#>", "#>="]), linear(), linear())

    for _ in range(rng.randint(1, 3)):
        kind = rng.random()
        if kind < 0.5:
            model.post(relation())
        elif kind < 0.75:
            op = rng.choice(["#/\\", "#\\/", "#^", "#=>", "#<=>"])
            f = Conn(op, (relation(), relation()))
            model.post(Conn("#~", (f,)) if rng.random() < 0.3 else f)
        elif kind < 0.85 and len(refs) > 1:
            model.post(AllDifferent(tuple(refs)))
        elif kind < 0.93:
            rows = {tuple(rng.randint(-3, 3) for _ in refs) for _ in range(rng.randint(1, 5))}
            model.post(Table(tuple(refs), tuple(sorted(rows)), negated=rng.random() < 0.3))
        else:
            items = tuple(rng.randint(-3, 3) for _ in range(3))
            model.post(Element(refs[0], items, refs[-1]))
    return model


def test_sat_solutions_match_enumeration_on_random_models():
    from tabulog.solvers import sat_solutions, solutions

    rng = random.Random(1234)
    for i in range(200):
        model = random_model(rng)
        expected = {tuple(sorted(s.items())) for s in solutions(model)}
        found = [tuple(sorted(s.items())) for s in sat_solutions(model)]
        assert len(found) == len(set(found)), i
        assert set(found) == expected, i


def test_projection_yields_each_projected_assignment_once():
    from tabulog.solvers import ConstraintModel, Domain, sat_solutions
    from tabulog.solvers.model import Rel

    model = ConstraintModel()
    x = model.new_var(Domain.interval(0, 3))
    y = model.new_var(Domain.interval(0, 3))
    model.post(Rel("#=<", x, y))
    assert sorted(s[0] for s in sat_solutions(model, [0])) == [0, 1, 2, 3]


def test_objective_finds_an_optimum():
    from tabulog.solvers import ConstraintModel, Domain, sat_solutions, solutions
    from tabulog.solvers.model import Objective, Op, Rel, objective_value

    model = ConstraintModel()
    x = model.new_var(Domain.interval(-2, 4))
    y = model.new_var(Domain.interval(0, 5))
    model.post(Rel("#=", Op("+", (x, y)), 4))
    model.objective = Objective("max", Op("-", (Op("*", (2, x)), y)))
    best = max(objective_value(model, s) for s in solutions(model))
    found = list(sat_solutions(model))
    assert len(found) == 1
    assert objective_value(model, found[0]) == best == 8


def test_emit_dimacs_writes_formula_and_variable_map(tmp_path):
    from tabulog.solvers import ConstraintModel, Domain, sat_solutions
    from tabulog.solvers.model import Rel
    from tabulog.solvers.sat import parse_dimacs

    model = ConstraintModel()
    x = model.new_var(Domain.interval(0, 2), "X")
    y = model.new_var(Domain.interval(-1, 2), "Y")
    model.post(Rel("#!=", x, y))
    path = tmp_path / "model.cnf"
    stats = {}
    assert len(list(sat_solutions(model, emit_dimacs=path, stats=stats))) == 9
    num_vars, clauses = parse_dimacs(path.read_text())
    assert num_vars > 0 and clauses
    mapping = (tmp_path / "model.cnf.map").read_text().splitlines()
    assert mapping[0].startswith("X 0 bits ")
    assert mapping[1].startswith("Y 1 bits ")
    assert not mapping[1].endswith("sign -")
    assert stats["sat_vars"] == num_vars


def test_non_linear_products_are_unsupported():
    from tabulog.errors import UnsupportedConstraint
    from tabulog.solvers import ConstraintModel, Domain, sat_solutions
    from tabulog.solvers.model import Op, Rel

    model = ConstraintModel()
    x = model.new_var(Domain.interval(0, 3))
    y = model.new_var(Domain.interval(0, 3))
    model.post(Rel("#=", Op("*", (x, y)), 4))
    with pytest.raises(UnsupportedConstraint):
        list(sat_solutions(model))
