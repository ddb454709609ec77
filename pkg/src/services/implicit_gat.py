"""
Implicit graph attention: similarity attention gated by embedded box geometry.

    w^v_ij = (W_K v_i)^T (W_Q v_j)
    w^b_ij = max(0, W_bG . embed(geometry(o_i, o_j)))
    w_ij   = w^b_ij exp(w^v_ij) / sum_k w^b_ik exp(w^v_ik)
    v*_i   = sum_j w_ij W v_j

Sums run over the in-neighbors of i (every j != i in an implicit graph). A
node whose gates are all zero gets a zero attention row and v*_i = 0.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from src.core.exceptions import ConfigurationError, ShapeError
from src.services.encoder import AttentionMap, FeatureInput, RegionFeatureSet, feature_matrix
from src.services.geometry import DetectedObject, pairwise_geometry_features, sinusoidal_embed
from src.services.graph import GraphVariant, RelationGraph

logger = logging.getLogger(__name__)

PARAMETER_NAMES = ("W", "W_K", "W_Q", "W_bG")


@dataclass(frozen=True)
class ImplicitGatParams:
    W: np.ndarray
    W_K: np.ndarray
    W_Q: np.ndarray
    W_bG: np.ndarray

    def __post_init__(self):
        for name in PARAMETER_NAMES:
            object.__setattr__(self, name, np.ascontiguousarray(getattr(self, name), dtype=np.float64))
        d = self.W.shape[0]
        for name in ("W", "W_K", "W_Q"):
            if getattr(self, name).shape != (d, d):
                raise ShapeError.mismatch(f"implicit {name}", getattr(self, name).shape, (d, d))
        if self.W_bG.ndim != 2 or self.W_bG.shape[0] != 1:
            raise ShapeError(f"implicit W_bG must be 1 x d_g, got {self.W_bG.shape}")

    @property
    def d(self) -> int:
        return self.W.shape[0]

    @property
    def d_g(self) -> int:
        return self.W_bG.shape[1]

    def to_arrays(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAMETER_NAMES}

    @classmethod
    def from_arrays(cls, arrays: Dict[str, np.ndarray]) -> "ImplicitGatParams":
        missing = [name for name in PARAMETER_NAMES if name not in arrays]
        if missing:
            raise ConfigurationError(f"implicit parameters missing: {', '.join(missing)}")
        return cls(**{name: arrays[name] for name in PARAMETER_NAMES})


def _check_inputs(X: np.ndarray, objects: Sequence[DetectedObject], g: RelationGraph, p: ImplicitGatParams):
    if g.variant != GraphVariant.IMPLICIT:
        raise ConfigurationError(f"implicit attention needs an implicit graph, got {g.variant.value}")
    if not (X.shape[0] == len(objects) == g.n):
        raise ShapeError(f"{X.shape[0]} feature rows, {len(objects)} objects and {g.n} graph nodes disagree")
    if X.shape[1] != p.d:
        raise ShapeError.mismatch("implicit features vs W", X.shape, p.W.shape)


def _forward_state(X: np.ndarray, objects: Sequence[DetectedObject], g: RelationGraph, p: ImplicitGatParams) -> dict:
    _check_inputs(X, objects, g, p)
    mask = g.adjacency()

    embedded = sinusoidal_embed(pairwise_geometry_features(objects), p.d_g)
    gate_logits = embedded @ p.W_bG[0]
    gates = np.where(mask, np.maximum(gate_logits, 0.0), 0.0)
    support = gates > 0.0

    keys = X @ p.W_K.T
    queries = X @ p.W_Q.T
    similarity = keys @ queries.T

    # shift by the row max over the support so exp never overflows
    row_max = np.where(support, similarity, -np.inf).max(axis=1)
    row_max = np.where(np.isfinite(row_max), row_max, 0.0)
    shifted = np.where(support, similarity - row_max[:, None], -np.inf)
    numerators = gates * np.exp(shifted)
    totals = numerators.sum(axis=1)
    has_support = totals > 0.0
    weights = np.zeros_like(numerators)
    weights[has_support] = numerators[has_support] / totals[has_support, None]

    values = X @ p.W.T
    return {
        "mask": mask,
        "embedded": embedded,
        "gate_logits": gate_logits,
        "gates": gates,
        "support": support,
        "keys": keys,
        "queries": queries,
        "similarity": similarity,
        "weights": weights,
        "values": values,
        "v_star": weights @ values,
    }


def implicit_forward(
    V: FeatureInput,
    objects: Sequence[DetectedObject],
    g: RelationGraph,
    p: ImplicitGatParams,
) -> Tuple[RegionFeatureSet, AttentionMap]:
    state = _forward_state(feature_matrix(V), objects, g, p)
    empty = int((~state["support"].any(axis=1)).sum())
    if empty:
        logger.debug(f"{empty} of {g.n} nodes have no geometric support")
    attention = AttentionMap(
        weights=state["weights"],
        raw_similarity=np.where(state["mask"], state["similarity"], 0.0),
        geometry_gate=state["gates"],
    )
    return RegionFeatureSet(state["v_star"]), attention


def implicit_backward(
    V: FeatureInput,
    objects: Sequence[DetectedObject],
    g: RelationGraph,
    p: ImplicitGatParams,
    upstream: np.ndarray,
) -> Dict[str, np.ndarray]:
    """Gradients of a loss with dL/dv* = upstream w.r.t. W, W_K, W_Q, W_bG and V.

    The ReLU gate uses subgradient 0 at 0.
    """
    X = feature_matrix(V)
    state = _forward_state(X, objects, g, p)
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != state["v_star"].shape:
        raise ShapeError.mismatch("implicit upstream gradient", upstream.shape, state["v_star"].shape)

    weights = state["weights"]
    d_weights = upstream @ state["values"].T
    d_values = weights.T @ upstream
    grad_W = d_values.T @ X
    grad_X = d_values @ p.W

    centered = d_weights - (weights * d_weights).sum(axis=1, keepdims=True)
    d_similarity = weights * centered

    gates = state["gates"]
    safe_gates = np.where(state["support"], gates, 1.0)
    d_gates = np.where(state["support"], weights / safe_gates * centered, 0.0)
    grad_W_bG = np.einsum("ij,ijk->k", d_gates, state["embedded"])[None, :]

    d_keys = d_similarity @ state["queries"]
    d_queries = d_similarity.T @ state["keys"]
    grad_W_K = d_keys.T @ X
    grad_W_Q = d_queries.T @ X
    grad_X = grad_X + d_keys @ p.W_K + d_queries @ p.W_Q

    return {"W": grad_W, "W_K": grad_W_K, "W_Q": grad_W_Q, "W_bG": grad_W_bG, "V": grad_X}
