"""
Shared command helpers: input loading, option parsing and output emission
"""
from pathlib import Path
from typing import List, Optional

import click
from pydantic import BaseModel

from src.core.config import settings
from src.core.exceptions import UsageError
from src.schemas.detection import DetectionFile
from src.services.param_store import ParameterSet, load_parameters
from src.services.relation_encoder import DetectionInputs
from src.utils.file_utils import dump_document, read_document, write_document

input_option = click.option(
    "--input", "input_path", required=True, type=click.Path(dir_okay=False), help="Detection file (JSON)"
)
output_option = click.option(
    "--output", "output_path", type=click.Path(dir_okay=False), default=None, help="Write JSON here instead of stdout"
)
seed_option = click.option("--seed", type=int, default=None, help="Random seed (default: RELGAT_SEED)")


def load_detections(path: str) -> DetectionInputs:
    return DetectionInputs.from_document(read_document(path, DetectionFile))


def load_params(path: Optional[str]) -> Optional[ParameterSet]:
    return load_parameters(path) if path else None


def resolve_seed(seed: Optional[int]) -> int:
    return settings.SEED if seed is None else seed


def parse_graph_kinds(text: str) -> List[str]:
    kinds = [part.strip() for part in text.split(",") if part.strip()]
    unknown = [kind for kind in kinds if kind not in settings.GRAPH_KINDS]
    if not kinds or unknown:
        raise UsageError(f"--graphs takes a comma-separated subset of {settings.GRAPH_KINDS}, got '{text}'")
    return list(dict.fromkeys(kinds))


def emit(document: BaseModel, output_path: Optional[str] = None) -> None:
    if output_path:
        write_document(document, output_path)
    else:
        click.echo(dump_document(document), nl=False)


def write_text(path: str, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")
