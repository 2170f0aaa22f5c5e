"""tabulog parse: pretty-print a program."""

from __future__ import annotations

import click
from rich.console import Console

from tabulog.errors import ParseError

err_console = Console(stderr=True, highlight=False)


@click.command()
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.option("--lowered", is_flag=True, help="Print the program after loops and comprehensions are lowered")
def parse(source: str, lowered: bool):
    """Parse SOURCE and print it back in canonical syntax."""
    from pathlib import Path

    from tabulog.lang import format_program, lower_loops, parse_program

    try:
        program = parse_program(Path(source).read_text(encoding="utf-8"), source)
    except ParseError as e:
        err_console.print(f"[bold red]parse error:[/bold red] {e}")
        raise SystemExit(2) from None
    if lowered:
        program = lower_loops(program)
    click.echo(format_program(program), nl=False)
