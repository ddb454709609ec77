"""
Fusion and weight sweep commands
"""
import logging

import click

from src.cli.dependencies import emit, output_option, write_text
from src.core.config import settings
from src.core.exceptions import InputError, UsageError
from src.schemas.reports import FusionDocument
from src.services import fusion as fusion_service
from src.utils.file_utils import dump_document, load_json

logger = logging.getLogger(__name__)


def load_distribution(path: str) -> fusion_service.WordDistribution:
    """A distribution file holds a JSON list of probabilities or {"probs": [...]}"""
    payload = load_json(path)
    if isinstance(payload, dict):
        payload = payload.get("probs")
    if not isinstance(payload, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in payload):
        raise InputError("expected a list of probabilities", source=path)
    try:
        return fusion_service.WordDistribution(payload)
    except InputError as e:
        raise InputError(e.message, source=path)


@click.command()
@click.option("--spa", "spa_path", required=True, type=click.Path(dir_okay=False), help="Spatial-stream distribution")
@click.option("--sem", "sem_path", required=True, type=click.Path(dir_okay=False), help="Semantic-stream distribution")
@click.option("--imp", "imp_path", required=True, type=click.Path(dir_okay=False), help="Implicit-stream distribution")
@click.option("--alpha", type=float, default=settings.FUSION_ALPHA, show_default=True)
@click.option("--beta", type=float, default=settings.FUSION_BETA, show_default=True)
@output_option
def fuse(spa_path, sem_path, imp_path, alpha, beta, output_path):
    """Fuse the three stream distributions with weights alpha, beta and 1 - alpha - beta."""
    weights = fusion_service.FusionWeights(alpha, beta)
    fused = fusion_service.fuse(
        load_distribution(spa_path), load_distribution(sem_path), load_distribution(imp_path), weights
    )
    emit(
        FusionDocument(alpha=alpha, beta=beta, implicit_weight=weights.implicit_weight, probs=fused.probs.tolist()),
        output_path,
    )


@click.command()
@click.option("--step", type=float, default=None, help=f"Grid step (default {settings.SWEEP_STEP})")
@click.option(
    "--scorer",
    type=click.Choice(sorted(fusion_service.BUILTIN_SCORERS)),
    default=None,
    help="Builtin scorer (default: reference)",
)
@click.option("--scorer-cmd", default=None, help="External scorer command, called as: CMD alpha beta")
@click.option("--workers", type=int, default=None, help=f"Concurrent scorer calls (default {settings.SWEEP_WORKERS})")
@click.option("--json", "as_json", is_flag=True, help="Print the JSON grid instead of the table")
@output_option
def sweep(step, scorer, scorer_cmd, workers, as_json, output_path):
    """Score the (alpha, beta) grid and print it as a table."""
    if scorer and scorer_cmd:
        raise UsageError("--scorer and --scorer-cmd are mutually exclusive")
    if scorer_cmd:
        scorer_fn, name = fusion_service.command_scorer(scorer_cmd), scorer_cmd
    else:
        name = scorer or "reference"
        scorer_fn = fusion_service.BUILTIN_SCORERS[name]

    document = fusion_service.sweep(scorer_fn, step=step, workers=workers, scorer_name=name)
    if output_path:
        write_text(output_path, dump_document(document))
    if as_json:
        emit(document)
    else:
        click.echo(fusion_service.render_table(document), nl=False)
