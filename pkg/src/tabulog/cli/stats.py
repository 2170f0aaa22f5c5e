"""Instrumentation output: ``key value`` lines on standard error."""

from __future__ import annotations

from collections.abc import Iterable
from typing import IO, TYPE_CHECKING

import click

if TYPE_CHECKING:
    from tabulog.engine.machine import Engine


def stat_lines(engine: Engine, table: bool = False, plan: bool = False, search: bool = False) -> list[tuple[str, int]]:
    lines: list[tuple[str, int]] = []
    if search:
        lines += [(f"engine.{k}", v) for k, v in engine.stats().items()]
        lines += [(f"store.{k}", v) for k, v in engine.store.stats().items()]
        if engine.has_fd:
            lines += [(f"cp.{k.removeprefix('cp_')}", v) for k, v in engine.fd.store.stats().items()]
            lines += [(f"sat.{k.removeprefix('sat_')}", v) for k, v in sorted(engine.fd.outputs.stats.items())]
    if table:
        for pred, counters in engine.tables.stats().items():
            lines += [(f"table.{pred}.{k}", v) for k, v in counters.items()]
    if plan:
        lines += [(f"plan.{k}", v) for k, v in engine.planner.stats().items()]
    return lines


def print_stats(lines: Iterable[tuple[str, int]], stream: IO[str] | None = None) -> None:
    for key, value in lines:
        click.echo(f"{key} {value}", file=stream, err=stream is None)
