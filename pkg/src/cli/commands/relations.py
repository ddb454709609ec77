"""
Relation extraction command
"""
import logging

import click

from src.cli.dependencies import emit, input_option, load_detections, load_params, output_option
from src.core.exceptions import UsageError
from src.services.relation_encoder import RelationEncoder

logger = logging.getLogger(__name__)


@click.command()
@input_option
@click.option("--mode", type=click.Choice(["spatial", "semantic"]), default="spatial", show_default=True)
@click.option("--weights", "weights_path", type=click.Path(dir_okay=False), default=None, help="Parameter file")
@click.option("--threshold", type=float, default=None, help="Semantic confidence threshold")
@output_option
def relations(input_path, mode, weights_path, threshold, output_path):
    """Emit the spatial or semantic edge list of a detection file."""
    if mode == "semantic" and not weights_path:
        raise UsageError("semantic mode needs --weights")
    inputs = load_detections(input_path)
    encoder = RelationEncoder(load_params(weights_path), threshold=threshold)
    document = encoder.relations(inputs, mode)
    logger.info(f"Extracted {len(document.edges)} {mode} edges from {inputs.image_id}")
    emit(document, output_path)
