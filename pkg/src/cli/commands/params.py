"""
Parameter initialization command
"""
import click

from src.cli.dependencies import resolve_seed, seed_option
from src.services.param_store import VARIANT_GROUPS, init_parameters, save_parameters


@click.command("init-params")
@seed_option
@click.option("--d", type=click.IntRange(min=1), default=None, help="Region feature dimension")
@click.option("--d-g", type=click.IntRange(min=8), default=None, help="Geometry embedding width (multiple of 8)")
@click.option("--d-model", type=click.IntRange(min=1), default=None, help="Classifier model width")
@click.option("--heads", type=click.IntRange(min=1), default=None, help="Classifier attention heads")
@click.option(
    "--variants",
    default=",".join(VARIANT_GROUPS),
    show_default=True,
    help="Comma-separated parameter groups (imp, spa, sem, cls)",
)
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False))
def init_params(seed, d, d_g, d_model, heads, variants, output_path):
    """Write a seeded, Glorot-initialized parameter file."""
    groups = [part.strip() for part in variants.split(",") if part.strip()]
    params = init_parameters(seed=resolve_seed(seed), d=d, d_g=d_g, d_model=d_model, heads=heads, variants=groups)
    save_parameters(params, output_path)
