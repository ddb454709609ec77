"""
Command-line application
"""
import logging

import click

from src.cli.commands import encoding, fusion, params, relations, verification
from src.core.config import settings
from src.core.exceptions import RelGatError
from src.utils.logging_config import setup_logging

logger = logging.getLogger(__name__)


class RelGatGroup(click.Group):
    """Maps library errors to a one-line message and their exit code"""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except RelGatError as exc:
            logger.debug(f"{type(exc).__name__}: {exc.message}")
            click.echo(f"error: {exc.message}", err=True)
            ctx.exit(exc.exit_code)


@click.group(cls=RelGatGroup)
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default=None,
    help=f"Logging level (default: {settings.LOG_LEVEL})",
)
@click.version_option(version="1.0.0", prog_name=settings.PROJECT_NAME)
def cli(log_level):
    """Relationship-aware region encoder for image captioning"""
    setup_logging(log_level)


cli.add_command(relations.relations)
cli.add_command(encoding.encode)
cli.add_command(encoding.attn)
cli.add_command(fusion.fuse)
cli.add_command(fusion.sweep)
cli.add_command(verification.gradcheck)
cli.add_command(verification.oracle)
cli.add_command(params.init_params)


def main():
    cli(prog_name=settings.PROJECT_NAME)
