"""
Gradient check and oracle equivalence commands
"""
import logging

import click

from src.cli.dependencies import emit, output_option, resolve_seed, seed_option
from src.core.config import settings
from src.core.exceptions import CheckFailure
from src.services.gradcheck import ORACLE_TOLERANCE, run_gradcheck, run_oracle_suite
from src.services.typed_gat import DIRECTION_MODES

logger = logging.getLogger(__name__)


@click.command()
@click.option("--graph", type=click.Choice(settings.GRAPH_KINDS), default="imp", show_default=True)
@seed_option
@click.option("--n", type=click.IntRange(min=1), default=5, show_default=True)
@click.option("--d", type=click.IntRange(min=1), default=16, show_default=True)
@click.option("--d-g", type=click.IntRange(min=8), default=16, show_default=True)
@click.option("--step", type=float, default=None, help=f"Finite difference step (default {settings.GRADCHECK_STEP})")
@click.option("--tolerance", type=float, default=None, help=f"Max relative error (default {settings.GRADCHECK_TOLERANCE})")
@click.option("--direction-mode", type=click.Choice(DIRECTION_MODES), default=None)
@click.option("--inject-fault", is_flag=True, help="Double the analytic gradients")
@output_option
def gradcheck(graph, seed, n, d, d_g, step, tolerance, direction_mode, inject_fault, output_path):
    """Check analytic gradients against central differences."""
    document = run_gradcheck(
        graph,
        seed=resolve_seed(seed),
        n=n,
        d=d,
        d_g=d_g,
        step=step,
        tolerance=tolerance,
        inject_fault=inject_fault,
        direction_mode=direction_mode,
    )
    emit(document, output_path)

    for report in document.reports:
        error = "non-finite" if report.max_relative_error is None else f"{report.max_relative_error:.3e}"
        click.echo(f"{report.parameter_name:<28} {error}", err=True)
    click.echo(f"gradcheck {graph}: {'PASS' if document.passed else 'FAIL'}", err=True)
    if not document.passed:
        raise CheckFailure(f"gradient check failed on the {graph} graph")


@click.command()
@click.option("--instances", type=click.IntRange(min=1), default=100, show_default=True)
@seed_option
@click.option("--max-n", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--max-d", type=click.IntRange(min=1), default=16, show_default=True)
@click.option("--tolerance", type=float, default=ORACLE_TOLERANCE, show_default=True)
@output_option
def oracle(instances, seed, max_n, max_d, tolerance, output_path):
    """Compare the vectorized GAT passes with the double-loop reference."""
    document = run_oracle_suite(instances, seed=resolve_seed(seed), max_n=max_n, max_d=max_d, tolerance=tolerance)
    emit(document, output_path)
    worst = max(case.max_abs_error for case in document.cases)
    click.echo(f"oracle: {len(document.cases)} cases, worst error {worst:.3e}", err=True)
    if not document.passed:
        raise CheckFailure("vectorized and reference passes disagree")
