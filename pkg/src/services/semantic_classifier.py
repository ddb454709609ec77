"""
Semantic relationship classifier (forward pass only).

The features of subject, object and their union box become a three-token
sequence: projected to the model width, offset by learned slot embeddings,
passed through two post-norm transformer encoder layers, mean-pooled and
projected to a distribution over the semantic classes (class 0 = no relation).
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from src.core.exceptions import ConfigurationError, ShapeError
from src.services.numerics import layer_norm, softmax_rows, stable_softmax

logger = logging.getLogger(__name__)

SLOTS = 3
LAYER_COUNT = 2
LAYER_TENSORS = (
    "W_q", "W_k", "W_v", "W_o",
    "b_q", "b_k", "b_v", "b_o",
    "W_ff1", "b_ff1", "W_ff2", "b_ff2",
    "norm1_gain", "norm1_bias", "norm2_gain", "norm2_bias",
)


@dataclass(frozen=True)
class EncoderLayerParams:
    W_q: np.ndarray
    W_k: np.ndarray
    W_v: np.ndarray
    W_o: np.ndarray
    b_q: np.ndarray
    b_k: np.ndarray
    b_v: np.ndarray
    b_o: np.ndarray
    W_ff1: np.ndarray
    b_ff1: np.ndarray
    W_ff2: np.ndarray
    b_ff2: np.ndarray
    norm1_gain: np.ndarray
    norm1_bias: np.ndarray
    norm2_gain: np.ndarray
    norm2_bias: np.ndarray

    def check(self, d_model: int, index: int):
        d_ff = self.W_ff1.shape[1] if self.W_ff1.ndim == 2 else -1
        expected = {
            "W_q": (d_model, d_model), "W_k": (d_model, d_model),
            "W_v": (d_model, d_model), "W_o": (d_model, d_model),
            "b_q": (d_model,), "b_k": (d_model,), "b_v": (d_model,), "b_o": (d_model,),
            "W_ff1": (d_model, d_ff), "b_ff1": (d_ff,),
            "W_ff2": (d_ff, d_model), "b_ff2": (d_model,),
            "norm1_gain": (d_model,), "norm1_bias": (d_model,),
            "norm2_gain": (d_model,), "norm2_bias": (d_model,),
        }
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise ShapeError.mismatch(f"classifier layer{index}.{name}", actual, shape)


@dataclass(frozen=True)
class SemanticClassifierParams:
    input_proj: np.ndarray
    input_bias: np.ndarray
    position: np.ndarray
    layers: Tuple[EncoderLayerParams, ...]
    output_proj: np.ndarray
    output_bias: np.ndarray
    heads: int

    def __post_init__(self):
        if self.input_proj.ndim != 2:
            raise ShapeError(f"classifier input_proj must be d x d_m, got {self.input_proj.shape}")
        d_model = self.d_model
        if d_model % self.heads != 0:
            raise ConfigurationError(f"model width {d_model} is not divisible by {self.heads} heads")
        if len(self.layers) != LAYER_COUNT:
            raise ConfigurationError(f"classifier needs {LAYER_COUNT} encoder layers, got {len(self.layers)}")
        if self.position.shape != (SLOTS, d_model):
            raise ShapeError.mismatch("classifier position", self.position.shape, (SLOTS, d_model))
        if self.input_bias.shape != (d_model,):
            raise ShapeError.mismatch("classifier input_bias", self.input_bias.shape, (d_model,))
        if self.output_proj.ndim != 2 or self.output_proj.shape[0] != d_model:
            raise ShapeError(f"classifier output_proj must be {d_model} x classes, got {self.output_proj.shape}")
        if self.output_bias.shape != (self.output_proj.shape[1],):
            raise ShapeError.mismatch("classifier output_bias", self.output_bias.shape, (self.output_proj.shape[1],))
        for index, layer in enumerate(self.layers):
            layer.check(d_model, index)

    @property
    def d(self) -> int:
        return self.input_proj.shape[0]

    @property
    def d_model(self) -> int:
        return self.input_proj.shape[1]

    @property
    def classes(self) -> int:
        return self.output_proj.shape[1]

    def to_arrays(self) -> Dict[str, np.ndarray]:
        arrays = {
            "input_proj": self.input_proj,
            "input_bias": self.input_bias,
            "position": self.position,
        }
        for index, layer in enumerate(self.layers):
            for name in LAYER_TENSORS:
                arrays[f"layer{index}.{name}"] = getattr(layer, name)
        arrays["output_proj"] = self.output_proj
        arrays["output_bias"] = self.output_bias
        return arrays

    @classmethod
    def from_arrays(cls, arrays: Dict[str, np.ndarray], heads: int) -> "SemanticClassifierParams":
        try:
            layers = tuple(
                EncoderLayerParams(**{name: np.asarray(arrays[f"layer{index}.{name}"]) for name in LAYER_TENSORS})
                for index in range(LAYER_COUNT)
            )
            return cls(
                input_proj=np.asarray(arrays["input_proj"]),
                input_bias=np.asarray(arrays["input_bias"]),
                position=np.asarray(arrays["position"]),
                layers=layers,
                output_proj=np.asarray(arrays["output_proj"]),
                output_bias=np.asarray(arrays["output_bias"]),
                heads=heads,
            )
        except KeyError as e:
            raise ConfigurationError(f"classifier parameters missing: {e.args[0]}")


def _self_attention(x: np.ndarray, layer: EncoderLayerParams, heads: int) -> np.ndarray:
    tokens, d_model = x.shape
    d_head = d_model // heads
    q = (x @ layer.W_q + layer.b_q).reshape(tokens, heads, d_head).transpose(1, 0, 2)
    k = (x @ layer.W_k + layer.b_k).reshape(tokens, heads, d_head).transpose(1, 0, 2)
    v = (x @ layer.W_v + layer.b_v).reshape(tokens, heads, d_head).transpose(1, 0, 2)

    scores = q @ k.transpose(0, 2, 1) / np.sqrt(d_head)
    attended = softmax_rows(scores) @ v
    merged = attended.transpose(1, 0, 2).reshape(tokens, d_model)
    return merged @ layer.W_o + layer.b_o


def _encoder_layer(x: np.ndarray, layer: EncoderLayerParams, heads: int) -> np.ndarray:
    x = layer_norm(x + _self_attention(x, layer, heads), layer.norm1_gain, layer.norm1_bias)
    hidden = np.maximum(x @ layer.W_ff1 + layer.b_ff1, 0.0)
    return layer_norm(x + hidden @ layer.W_ff2 + layer.b_ff2, layer.norm2_gain, layer.norm2_bias)


def semantic_classifier_forward(
    v_i: np.ndarray,
    v_j: np.ndarray,
    v_union: np.ndarray,
    p: SemanticClassifierParams,
) -> np.ndarray:
    tokens = []
    for name, v in (("subject", v_i), ("object", v_j), ("union", v_union)):
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (p.d,):
            raise ShapeError.mismatch(f"classifier {name} feature", v.shape, (p.d,))
        tokens.append(v)

    x = np.stack(tokens) @ p.input_proj + p.input_bias + p.position
    for layer in p.layers:
        x = _encoder_layer(x, layer, p.heads)
    logits = x.mean(axis=0) @ p.output_proj + p.output_bias
    return stable_softmax(logits)


def predict_pairs(
    features: np.ndarray,
    union_features: Dict[Tuple[int, int], np.ndarray],
    p: SemanticClassifierParams,
) -> List[Tuple[int, int, np.ndarray]]:
    """Class distributions for every ordered pair of distinct regions.

    Pairs without an explicit union feature use the elementwise maximum of the
    two region features as the pooled union-box feature.
    """
    n = features.shape[0]
    predictions = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            union = union_features.get((i, j))
            if union is None:
                union = np.maximum(features[i], features[j])
            predictions.append((i, j, semantic_classifier_forward(features[i], features[j], union, p)))
    logger.debug(f"Classified {len(predictions)} region pairs")
    return predictions
