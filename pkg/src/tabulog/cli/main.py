"""tabulog CLI: main entry point."""

import click

from tabulog.cli.parse import parse
from tabulog.cli.run import run
from tabulog.config import get_settings
from tabulog.logs import configure_logging


@click.group()
@click.version_option(package_name="tabulog")
def cli():
    """tabulog: run tabled logic programs with CP, SAT and MIP constraint backends."""
    settings = get_settings()
    configure_logging(settings.log_level, settings.log_json)


cli.add_command(run)
cli.add_command(parse)
