"""
Encoding and attention export commands
"""
import logging
from pathlib import Path

import click

from src.cli.dependencies import (
    emit,
    input_option,
    load_detections,
    load_params,
    output_option,
    parse_graph_kinds,
    write_text,
)
from src.core.config import settings
from src.schemas.detection import DetectionFile
from src.services.relation_encoder import DetectionInputs, RelationEncoder, encode_documents, top_k_attention
from src.services.typed_gat import AGGREGATIONS, DIRECTION_MODES
from src.utils.file_utils import read_document, write_document
from src.utils.svg_overlay import render_overlay

logger = logging.getLogger(__name__)

params_option = click.option(
    "--params", "params_path", required=True, type=click.Path(dir_okay=False), help="Parameter file"
)


@click.command()
@input_option
@click.option("--graphs", default=",".join(settings.GRAPH_KINDS), show_default=True, help="Comma-separated graph kinds")
@params_option
@click.option("--threshold", type=float, default=None, help="Semantic confidence threshold")
@click.option("--direction-mode", type=click.Choice(DIRECTION_MODES), default=None)
@click.option("--aggregation", type=click.Choice(AGGREGATIONS), default=None)
@click.option("--output-dir", type=click.Path(file_okay=False), default=None, help="Write features.json and attention.json")
def encode(input_path, graphs, params_path, threshold, direction_mode, aggregation, output_dir):
    """Refine region features with the requested relation graphs."""
    kinds = parse_graph_kinds(graphs)
    inputs = load_detections(input_path)
    encoder = RelationEncoder(
        load_params(params_path), threshold=threshold, direction_mode=direction_mode, aggregation=aggregation
    )
    document = encode_documents(inputs.image_id, encoder.encode(inputs, kinds))

    if output_dir:
        write_document(document.features, Path(output_dir) / "features.json")
        write_document(document.attention, Path(output_dir) / "attention.json")
        logger.info(f"Wrote features and attention for {kinds} to {output_dir}")
    else:
        emit(document)


@click.command()
@input_option
@params_option
@click.option("--graph", type=click.Choice(settings.GRAPH_KINDS), default="imp", show_default=True)
@click.option("--top-k", type=int, default=None, help=f"Sources per node (default {settings.TOP_K})")
@click.option("--svg", "svg_path", type=click.Path(dir_okay=False), default=None, help="Write an SVG overlay")
@click.option("--focus", type=int, default=0, show_default=True, help="Node drawn in the SVG overlay")
@click.option("--threshold", type=float, default=None, help="Semantic confidence threshold")
@output_option
def attn(input_path, params_path, graph, top_k, svg_path, focus, threshold, output_path):
    """Export the top-k incoming attention weights of every region."""
    detections = read_document(input_path, DetectionFile)
    inputs = DetectionInputs.from_document(detections)
    encoder = RelationEncoder(load_params(params_path), threshold=threshold)
    document = top_k_attention(inputs, encoder.encode_graph(graph, inputs), top_k)

    if svg_path:
        write_text(svg_path, render_overlay(document, focus, detections.image_width, detections.image_height))
        logger.info(f"Wrote attention overlay of node {focus} to {svg_path}")
    emit(document, output_path)
