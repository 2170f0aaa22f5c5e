"""tabulog run: execute a goal against a program."""

from __future__ import annotations

from typing import NoReturn

import click
from pydantic import ValidationError
from rich.console import Console

from tabulog.cli.options import CliConfig
from tabulog.cli.stats import print_stats, stat_lines
from tabulog.errors import ConfigError, TabulogError

err_console = Console(stderr=True, highlight=False)


@click.command()
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.option("--goal", "-g", default="main", show_default=True, help="Goal to run")
@click.option("--all", "all_solutions", is_flag=True, help="Enumerate every solution instead of the first")
@click.option("--backend", type=click.Choice(["cp", "sat", "mip"]), default=None, help="Constraint solver backend")
@click.option("--emit-dimacs", type=click.Path(dir_okay=False), default=None, help="Write the CNF of each SAT solve")
@click.option("--emit-lp", type=click.Path(dir_okay=False), default=None, help="Write the LP model of each MIP solve")
@click.option("--table-stats", is_flag=True, help="Print per-predicate tabling counters to stderr")
@click.option("--plan-stats", is_flag=True, help="Print planner counters to stderr")
@click.option("--stats", is_flag=True, help="Print engine, term store and solver counters to stderr")
@click.option("--seed", type=int, default=None, help="Seed for the SAT solver's decision order")
@click.option("--limit", type=int, default=None, help="Default resource limit for plan/2,3 and best_plan/2,3")
def run(source: str, **options: object):
    """Run a goal (default: main) from SOURCE.

    Exit status is 0 when the goal succeeds, 1 when it fails and 2 on errors.
    """
    try:
        config = CliConfig(source=source, **options)  # type: ignore[arg-type]
    except ValidationError as e:
        message = "; ".join(err["msg"].removeprefix("Value error, ") for err in e.errors())
        _fail(ConfigError(message))
    raise SystemExit(execute(config))


def _fail(error: Exception) -> NoReturn:
    err_console.print(f"[bold red]error:[/bold red] {error}")
    raise SystemExit(2)


def execute(config: CliConfig) -> int:
    from tabulog.config import get_settings
    from tabulog.engine import Engine
    from tabulog.terms.ops import format_term

    updates: dict[str, object] = {}
    if config.seed is not None:
        updates["sat_seed"] = config.seed
    if config.limit is not None:
        updates["plan_default_limit"] = config.limit
    settings = get_settings().model_copy(update=updates)

    engine = None
    found = 0
    try:
        engine = Engine.from_file(config.source, settings=settings, backend=config.backend)
        if config.emit_dimacs or config.emit_lp:
            engine.fd.outputs.emit_dimacs = config.emit_dimacs
            engine.fd.outputs.emit_lp = config.emit_lp
        solutions = engine.query(config.goal)
        try:
            for bindings in solutions:
                found += 1
                if bindings:
                    click.echo(", ".join(f"{name} = {format_term(value)}" for name, value in bindings.items()))
                if not config.all_solutions:
                    break
        finally:
            solutions.close()
    except TabulogError as e:
        _report(engine, config)
        _fail(e)
    except RecursionError:
        _report(engine, config)
        _fail(TabulogError("recursion too deep"))
    _report(engine, config)
    if not found:
        err_console.print("no")
        return 1
    return 0


def _report(engine: object, config: CliConfig) -> None:
    if engine is None:
        return
    print_stats(stat_lines(engine, config.table_stats, config.plan_stats, config.stats))  # type: ignore[arg-type]
