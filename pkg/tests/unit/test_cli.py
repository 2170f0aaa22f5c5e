"""Tests for tabulog.cli.* commands using Click's CliRunner."""

from __future__ import annotations

from click.testing import CliRunner

GRAPH = """
edge(n0, n1, 1).
edge(n1, n2, 1).
edge(n2, n3, 1).
final(n3) => true.
action(S, T, A, C) => edge(S, T, W), A = $go(T), C = W.
"""


def write(tmp_path, text, name="prog.pi"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def invoke(*args):
    from tabulog.cli.main import cli

    return CliRunner().invoke(cli, list(args))


# ── tabulog run ───────────────────────────────────────────────────────────────


def test_run_main_prints_program_output(programs_dir):
    result = invoke("run", str(programs_dir / "triangle.pi"))
    assert result.exit_code == 0
    assert result.stdout == "23\n"


def test_run_prints_bindings(tmp_path):
    source = write(tmp_path, "p(1).\np(2).\n")
    result = invoke("run", source, "--goal", "p(X)")
    assert result.exit_code == 0
    assert result.stdout == "X = 1\n"
    result = invoke("run", source, "--goal", "p(X)", "--all")
    assert result.stdout == "X = 1\nX = 2\n"


def test_run_enumerates_all_queens(programs_dir):
    result = invoke("run", str(programs_dir / "queens.pi"), "--goal", "queens(8, Q)", "--all", "--backend", "cp")
    assert result.exit_code == 0
    lines = result.stdout.splitlines()
    assert len(lines) == len(set(lines)) == 92
    assert all(line.startswith("Q = [") for line in lines)


def test_run_prints_cyclic_bindings(tmp_path):
    result = invoke("run", write(tmp_path, "p(1).\n"), "--goal", "X = $f(X)")
    assert result.exit_code == 0
    assert result.stdout == "X = f(f(...))\n"


def test_failing_goal_exits_one(tmp_path):
    source = write(tmp_path, "p(1).\n")
    result = invoke("run", source, "--goal", "p(2)")
    assert result.exit_code == 1
    assert result.stdout == ""
    assert result.stderr.strip() == "no"


def test_errors_exit_two(tmp_path):
    source = write(tmp_path, "p(1).\n")
    result = invoke("run", source, "--goal", "nope(1)")
    assert result.exit_code == 2
    assert "error:" in result.stderr
    assert "nope" in result.stderr

    broken = write(tmp_path, "p(X) => X = 1.5.\n", "broken.pi")
    result = invoke("run", broken)
    assert result.exit_code == 2
    assert "error:" in result.stderr


def test_emit_options_require_their_backend(programs_dir):
    queens = str(programs_dir / "queens.pi")
    result = invoke("run", queens, "--emit-lp", "m.lp")
    assert result.exit_code == 2
    assert "--emit-lp requires --backend mip" in result.stderr
    result = invoke("run", queens, "--backend", "cp", "--emit-dimacs", "m.cnf")
    assert result.exit_code == 2
    assert "--emit-dimacs requires --backend sat" in result.stderr


def test_emit_dimacs(programs_dir, tmp_path):
    out = tmp_path / "queens.cnf"
    result = invoke(
        "run", str(programs_dir / "queens.pi"), "--goal", "queens(4, Q)", "--backend", "sat", "--emit-dimacs", str(out)
    )
    assert result.exit_code == 0
    assert result.stdout.startswith("Q = [")
    assert out.read_text().startswith("p cnf ")
    assert (tmp_path / "queens.cnf.map").exists()


def test_emit_lp(programs_dir, tmp_path):
    out = tmp_path / "queens.lp"
    result = invoke(
        "run", str(programs_dir / "queens.pi"), "--goal", "queens(4, Q)", "--backend", "mip", "--emit-lp", str(out)
    )
    assert result.exit_code == 0
    assert result.stdout.startswith("Q = [")
    text = out.read_text()
    assert text.startswith("Minimize")
    assert text.rstrip().endswith("End")


def test_table_stats(programs_dir):
    result = invoke("run", str(programs_dir / "triangle.pi"), "--table-stats")
    assert result.exit_code == 0
    assert "table.path/4.keys 10" in result.stderr.splitlines()


def test_search_stats(programs_dir):
    result = invoke("run", str(programs_dir / "queens.pi"), "--goal", "queens(4, Q)", "--stats")
    assert result.exit_code == 0
    keys = {line.split()[0] for line in result.stderr.splitlines()}
    assert {"engine.calls", "engine.backtracks", "cp.vars", "cp.choices"} <= keys
    assert any(k.startswith("store.") for k in keys)


def test_plan_stats_and_limit(tmp_path):
    source = write(tmp_path, GRAPH)
    result = invoke("run", source, "--goal", "best_plan(n0, P, C)", "--plan-stats")
    assert result.exit_code == 0
    assert result.stdout == "P = [go(n1),go(n2),go(n3)], C = 3\n"
    assert any(line.startswith("plan.rounds ") for line in result.stderr.splitlines())

    result = invoke("run", source, "--goal", "best_plan(n0, P, C)", "--limit", "2")
    assert result.exit_code == 1


def test_stats_are_reported_on_errors(tmp_path):
    source = write(tmp_path, "p(1).\n")
    result = invoke("run", source, "--goal", "p(X), X = foo(1)", "--stats")
    assert result.exit_code == 2
    assert "engine.calls" in result.stderr


# ── tabulog parse ─────────────────────────────────────────────────────────────


def test_parse_is_idempotent(programs_dir, tmp_path):
    first = invoke("parse", str(programs_dir / "loops.pi"))
    assert first.exit_code == 0
    assert "foreach (" in first.stdout
    again = invoke("parse", write(tmp_path, first.stdout))
    assert again.exit_code == 0
    assert again.stdout == first.stdout


def test_parse_lowered(programs_dir):
    result = invoke("parse", str(programs_dir / "loops.pi"), "--lowered")
    assert result.exit_code == 0
    assert "foreach (" not in result.stdout
    assert "foreach_" in result.stdout


def test_parse_error(tmp_path):
    result = invoke("parse", write(tmp_path, "p(X) => X = 1.5.\n"))
    assert result.exit_code == 2
    assert "parse error:" in result.stderr


def test_cli_configures_logging_from_settings(tmp_path, monkeypatch, mocker):
    configure = mocker.patch("tabulog.cli.main.configure_logging")
    monkeypatch.setenv("TABULOG_LOG_LEVEL", "DEBUG")
    monkeypatch.setenv("TABULOG_LOG_JSON", "true")
    result = invoke("run", write(tmp_path, "p(1).\n"), "--goal", "p(1)")
    assert result.exit_code == 0
    configure.assert_called_once_with("DEBUG", True)
