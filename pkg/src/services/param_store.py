"""
Parameter initialization and JSON parameter files
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Optional, Union

import numpy as np
from pydantic import ValidationError

from src.core.config import settings
from src.core.exceptions import ConfigurationError
from src.schemas.params import ParameterDims, ParameterFile, TensorRecord
from src.services.graph import GraphVariant, labels_for_variant
from src.services.implicit_gat import ImplicitGatParams
from src.services.numerics import glorot_uniform
from src.services.semantic_classifier import (
    LAYER_COUNT,
    SLOTS,
    EncoderLayerParams,
    SemanticClassifierParams,
)
from src.services.typed_gat import DIRECTIONS, TypedGatParams
from src.utils.file_utils import read_document, write_document

logger = logging.getLogger(__name__)

GROUPS = ("implicit", "spatial", "semantic", "classifier")
VARIANT_GROUPS = {"imp": "implicit", "spa": "spatial", "sem": "semantic", "cls": "classifier"}


@dataclass(frozen=True)
class ParameterSet:
    seed: int
    dims: ParameterDims
    implicit: Optional[ImplicitGatParams] = None
    spatial: Optional[TypedGatParams] = None
    semantic: Optional[TypedGatParams] = None
    classifier: Optional[SemanticClassifierParams] = None

    def require(self, group: str):
        value = getattr(self, group)
        if value is None:
            raise ConfigurationError(f"parameter file has no '{group}' parameters")
        return value

    def groups(self) -> Dict[str, object]:
        return {name: getattr(self, name) for name in GROUPS if getattr(self, name) is not None}


def _glorot_matrix(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return glorot_uniform(rng, (rows, cols), fan_in=cols, fan_out=rows)


def init_implicit(rng: np.random.Generator, d: int, d_g: int) -> ImplicitGatParams:
    return ImplicitGatParams(
        W=_glorot_matrix(rng, d, d),
        W_K=_glorot_matrix(rng, d, d),
        W_Q=_glorot_matrix(rng, d, d),
        W_bG=_glorot_matrix(rng, 1, d_g),
    )


def init_typed(rng: np.random.Generator, d: int, variant: GraphVariant) -> TypedGatParams:
    W_dir = {name: _glorot_matrix(rng, d, d) for name in DIRECTIONS}
    Wv_dir = {name: _glorot_matrix(rng, d, d) for name in DIRECTIONS}
    W_K = _glorot_matrix(rng, d, d)
    labels = [label.name for label in labels_for_variant(variant)]
    return TypedGatParams(
        W_dir=W_dir,
        Wv_dir=Wv_dir,
        W_K=W_K,
        b_lab={label: np.zeros(d) for label in labels},
        c_lab={label: 0.0 for label in labels},
    )


def init_classifier(
    rng: np.random.Generator,
    d: int,
    d_model: int,
    heads: int,
    classes: int,
    ff_multiplier: Optional[int] = None,
) -> SemanticClassifierParams:
    if ff_multiplier is None:
        ff_multiplier = settings.CLASSIFIER_FF_MULTIPLIER
    if d_model % heads != 0:
        raise ConfigurationError(f"model width {d_model} is not divisible by {heads} heads")
    d_ff = ff_multiplier * d_model

    input_proj = glorot_uniform(rng, (d, d_model), fan_in=d, fan_out=d_model)
    position = glorot_uniform(rng, (SLOTS, d_model), fan_in=SLOTS, fan_out=d_model)
    layers = []
    for _ in range(LAYER_COUNT):
        square = {name: glorot_uniform(rng, (d_model, d_model), d_model, d_model) for name in ("W_q", "W_k", "W_v", "W_o")}
        layers.append(
            EncoderLayerParams(
                **square,
                b_q=np.zeros(d_model),
                b_k=np.zeros(d_model),
                b_v=np.zeros(d_model),
                b_o=np.zeros(d_model),
                W_ff1=glorot_uniform(rng, (d_model, d_ff), d_model, d_ff),
                b_ff1=np.zeros(d_ff),
                W_ff2=glorot_uniform(rng, (d_ff, d_model), d_ff, d_model),
                b_ff2=np.zeros(d_model),
                norm1_gain=np.ones(d_model),
                norm1_bias=np.zeros(d_model),
                norm2_gain=np.ones(d_model),
                norm2_bias=np.zeros(d_model),
            )
        )
    output_proj = glorot_uniform(rng, (d_model, classes), fan_in=d_model, fan_out=classes)
    return SemanticClassifierParams(
        input_proj=input_proj,
        input_bias=np.zeros(d_model),
        position=position,
        layers=tuple(layers),
        output_proj=output_proj,
        output_bias=np.zeros(classes),
        heads=heads,
    )


def init_parameters(
    seed: Optional[int] = None,
    d: Optional[int] = None,
    d_g: Optional[int] = None,
    d_model: Optional[int] = None,
    heads: Optional[int] = None,
    variants: Iterable[str] = ("imp", "spa", "sem", "cls"),
) -> ParameterSet:
    """Glorot-uniform matrices, zero biases and offsets, unit norm gains.

    Each group draws from its own child stream of the seed, so a group's
    values do not depend on which other groups are requested.
    """
    seed = settings.SEED if seed is None else seed
    try:
        dims = ParameterDims(
            d=settings.FEATURE_DIM if d is None else d,
            d_g=settings.GEOMETRY_EMBED_DIM if d_g is None else d_g,
            d_model=settings.CLASSIFIER_DIM if d_model is None else d_model,
            heads=settings.CLASSIFIER_HEADS if heads is None else heads,
            semantic_classes=settings.SEMANTIC_CLASSES,
        )
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigurationError(f"parameter dimension {first['loc'][0]}: {first['msg']}")
    if dims.d_g % 8 != 0:
        raise ConfigurationError(f"embedding width d_g={dims.d_g} must be a multiple of 8")

    requested = set()
    for variant in variants:
        if variant not in VARIANT_GROUPS:
            raise ConfigurationError(f"unknown parameter group '{variant}'")
        requested.add(VARIANT_GROUPS[variant])

    streams = dict(zip(GROUPS, (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(len(GROUPS)))))
    groups = {}
    if "implicit" in requested:
        groups["implicit"] = init_implicit(streams["implicit"], dims.d, dims.d_g)
    if "spatial" in requested:
        groups["spatial"] = init_typed(streams["spatial"], dims.d, GraphVariant.SPATIAL)
    if "semantic" in requested:
        groups["semantic"] = init_typed(streams["semantic"], dims.d, GraphVariant.SEMANTIC)
    if "classifier" in requested:
        groups["classifier"] = init_classifier(
            streams["classifier"], dims.d, dims.d_model, dims.heads, dims.semantic_classes
        )

    logger.info(f"Initialized parameter groups {sorted(groups)} with seed {seed}, d={dims.d}")
    return ParameterSet(seed=seed, dims=dims, **groups)


def to_parameter_file(params: ParameterSet) -> ParameterFile:
    tensors = []
    for group, value in params.groups().items():
        for name, array in value.to_arrays().items():
            array = np.asarray(array, dtype=np.float64)
            tensors.append(
                TensorRecord(name=f"{group}.{name}", shape=list(array.shape), data=array.reshape(-1).tolist())
            )
    return ParameterFile(format_version=settings.FORMAT_VERSION, seed=params.seed, dims=params.dims, tensors=tensors)


def from_parameter_file(document: ParameterFile) -> ParameterSet:
    grouped: Dict[str, Dict[str, np.ndarray]] = {}
    for record in document.tensors:
        group, _, name = record.name.partition(".")
        if group not in GROUPS or not name:
            raise ConfigurationError(f"unrecognized tensor name '{record.name}'")
        grouped.setdefault(group, {})[name] = np.array(record.data, dtype=np.float64).reshape(record.shape)

    groups = {}
    if "implicit" in grouped:
        groups["implicit"] = ImplicitGatParams.from_arrays(grouped["implicit"])
    if "spatial" in grouped:
        groups["spatial"] = TypedGatParams.from_arrays(grouped["spatial"])
    if "semantic" in grouped:
        groups["semantic"] = TypedGatParams.from_arrays(grouped["semantic"])
    if "classifier" in grouped:
        groups["classifier"] = SemanticClassifierParams.from_arrays(grouped["classifier"], heads=document.dims.heads)
    return ParameterSet(seed=document.seed, dims=document.dims, **groups)


def save_parameters(params: ParameterSet, path: Union[str, Path]) -> None:
    write_document(to_parameter_file(params), path, indent=None)
    logger.info(f"Wrote parameters to {path}")


def load_parameters(path: Union[str, Path]) -> ParameterSet:
    return from_parameter_file(read_document(path, ParameterFile))
