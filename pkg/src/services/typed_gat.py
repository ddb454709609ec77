"""
Typed directional graph attention for spatial and semantic graphs.

For every aggregation edge e = (i <- j, direction, label):

    s_e    = (W_K v_i)^T (Wv_dir v_j) + c_lab
    w_e    = softmax of s_e over the edges aggregated into i
    v*_i   = sum_e w_e (W_dir v_j + b_lab)

In "incoming" mode node i aggregates its self-loop (self matrices) and every
stored edge j -> i (forward matrices). "bidirectional" mode also routes every
stored edge i -> j back into i through the backward matrices with the same
label. "uniform" aggregation replaces the softmax with 1 / K.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.core.config import settings
from src.core.exceptions import ConfigurationError, ShapeError
from src.services.encoder import AttentionMap, FeatureInput, RegionFeatureSet, feature_matrix
from src.services.graph import EdgeKind, GraphVariant, RelationGraph

logger = logging.getLogger(__name__)

DIRECTIONS = ("forward", "backward", "self")
FORWARD, BACKWARD, SELF = 0, 1, 2
DIRECTION_MODES = ("incoming", "bidirectional")
AGGREGATIONS = ("attention", "uniform")


@dataclass(frozen=True)
class TypedGatParams:
    W_dir: Dict[str, np.ndarray]
    Wv_dir: Dict[str, np.ndarray]
    W_K: np.ndarray
    b_lab: Dict[str, np.ndarray]
    c_lab: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        W_K = np.ascontiguousarray(self.W_K, dtype=np.float64)
        d = W_K.shape[0]
        if W_K.shape != (d, d):
            raise ShapeError(f"typed W_K must be square, got {W_K.shape}")
        object.__setattr__(self, "W_K", W_K)

        for family in ("W_dir", "Wv_dir"):
            matrices = getattr(self, family)
            missing = [name for name in DIRECTIONS if name not in matrices]
            if missing:
                raise ConfigurationError(f"typed {family} missing directions: {', '.join(missing)}")
            converted = {}
            for name in DIRECTIONS:
                m = np.ascontiguousarray(matrices[name], dtype=np.float64)
                if m.shape != (d, d):
                    raise ShapeError.mismatch(f"typed {family}.{name}", m.shape, (d, d))
                converted[name] = m
            object.__setattr__(self, family, converted)

        biases = {}
        for label, b in self.b_lab.items():
            b = np.ascontiguousarray(b, dtype=np.float64).reshape(-1)
            if b.shape != (d,):
                raise ShapeError.mismatch(f"typed b_lab.{label}", b.shape, (d,))
            biases[label] = b
        object.__setattr__(self, "b_lab", biases)
        object.__setattr__(self, "c_lab", {label: float(c) for label, c in self.c_lab.items()})

    @property
    def d(self) -> int:
        return self.W_K.shape[0]

    @property
    def labels(self) -> List[str]:
        return sorted(set(self.b_lab) & set(self.c_lab))

    def to_arrays(self) -> Dict[str, np.ndarray]:
        arrays = {}
        for name in DIRECTIONS:
            arrays[f"W_dir.{name}"] = self.W_dir[name]
        for name in DIRECTIONS:
            arrays[f"Wv_dir.{name}"] = self.Wv_dir[name]
        arrays["W_K"] = self.W_K
        for label in sorted(self.b_lab):
            arrays[f"b_lab.{label}"] = self.b_lab[label]
        for label in sorted(self.c_lab):
            arrays[f"c_lab.{label}"] = np.array(self.c_lab[label])
        return arrays

    @classmethod
    def from_arrays(cls, arrays: Dict[str, np.ndarray]) -> "TypedGatParams":
        if "W_K" not in arrays:
            raise ConfigurationError("typed parameters missing: W_K")
        W_dir, Wv_dir, b_lab, c_lab = {}, {}, {}, {}
        for name, value in arrays.items():
            family, _, key = name.partition(".")
            if family == "W_dir":
                W_dir[key] = value
            elif family == "Wv_dir":
                Wv_dir[key] = value
            elif family == "b_lab":
                b_lab[key] = value
            elif family == "c_lab":
                c_lab[key] = float(np.asarray(value).reshape(-1)[0])
        return cls(W_dir=W_dir, Wv_dir=Wv_dir, W_K=arrays["W_K"], b_lab=b_lab, c_lab=c_lab)


@dataclass(frozen=True)
class AggregationEdges:
    target: np.ndarray
    source: np.ndarray
    direction: np.ndarray
    label_index: np.ndarray
    label_names: Tuple[str, ...]

    @property
    def size(self) -> int:
        return self.target.shape[0]


def aggregation_edges(g: RelationGraph, direction_mode: Optional[str] = None) -> AggregationEdges:
    """Edges each node aggregates over, sorted by (target, source, direction, label)"""
    if direction_mode is None:
        direction_mode = settings.TYPED_DIRECTION_MODE
    if direction_mode not in DIRECTION_MODES:
        raise ConfigurationError(f"unknown direction mode '{direction_mode}'")

    rows = []
    for edge in g.edges:
        if edge.label.kind == EdgeKind.SELF_LOOP:
            rows.append((edge.dst, edge.src, SELF, edge.label.name))
            continue
        rows.append((edge.dst, edge.src, FORWARD, edge.label.name))
        if direction_mode == "bidirectional":
            rows.append((edge.src, edge.dst, BACKWARD, edge.label.name))
    rows.sort()

    label_names = tuple(sorted({row[3] for row in rows}))
    lookup = {name: k for k, name in enumerate(label_names)}
    return AggregationEdges(
        target=np.array([r[0] for r in rows], dtype=np.int64),
        source=np.array([r[1] for r in rows], dtype=np.int64),
        direction=np.array([r[2] for r in rows], dtype=np.int64),
        label_index=np.array([lookup[r[3]] for r in rows], dtype=np.int64),
        label_names=label_names,
    )


def _check_inputs(X: np.ndarray, g: RelationGraph, p: TypedGatParams, edges: AggregationEdges):
    if g.variant == GraphVariant.IMPLICIT:
        raise ConfigurationError("typed attention needs a spatial or semantic graph")
    if X.shape[0] != g.n:
        raise ShapeError(f"{X.shape[0]} feature rows for a graph of {g.n} nodes")
    if X.shape[1] != p.d:
        raise ShapeError.mismatch("typed features vs W_K", X.shape, p.W_K.shape)
    for label in edges.label_names:
        if label not in p.b_lab or label not in p.c_lab:
            raise ConfigurationError(f"no b_lab/c_lab parameters for edge label '{label}'")


def _forward_state(X: np.ndarray, g: RelationGraph, p: TypedGatParams, direction_mode, aggregation) -> dict:
    if aggregation is None:
        aggregation = settings.TYPED_AGGREGATION
    if aggregation not in AGGREGATIONS:
        raise ConfigurationError(f"unknown aggregation '{aggregation}'")
    edges = aggregation_edges(g, direction_mode)
    _check_inputs(X, g, p, edges)
    n = g.n
    tgt, src, direction = edges.target, edges.source, edges.direction

    biases = np.stack([p.b_lab[name] for name in edges.label_names])
    offsets = np.array([p.c_lab[name] for name in edges.label_names])

    keys = X @ p.W_K.T
    score_proj = np.stack([X @ p.Wv_dir[name].T for name in DIRECTIONS])
    value_proj = np.stack([X @ p.W_dir[name].T for name in DIRECTIONS])

    projected = score_proj[direction, src]
    scores = (keys[tgt] * projected).sum(axis=1) + offsets[edges.label_index]
    messages = value_proj[direction, src] + biases[edges.label_index]

    if aggregation == "attention":
        row_max = np.full(n, -np.inf)
        np.maximum.at(row_max, tgt, scores)
        exps = np.exp(scores - row_max[tgt])
        totals = np.zeros(n)
        np.add.at(totals, tgt, exps)
        weights = exps / totals[tgt]
    else:
        counts = np.bincount(tgt, minlength=n).astype(np.float64)
        weights = 1.0 / counts[tgt]

    v_star = np.zeros((n, X.shape[1]))
    np.add.at(v_star, tgt, weights[:, None] * messages)

    return {
        "edges": edges,
        "aggregation": aggregation,
        "keys": keys,
        "projected": projected,
        "scores": scores,
        "messages": messages,
        "weights": weights,
        "v_star": v_star,
    }


def _attention_map(n: int, edges: AggregationEdges, weights: np.ndarray, scores: np.ndarray) -> AttentionMap:
    dense = np.zeros((n, n))
    np.add.at(dense, (edges.target, edges.source), weights)
    raw = np.zeros((n, n))
    # outgoing edges first so an incoming edge's logit wins the cell
    order = sorted(range(edges.size), key=lambda e: (edges.direction[e] != BACKWARD, e))
    for e in order:
        raw[edges.target[e], edges.source[e]] = scores[e]
    return AttentionMap(weights=dense, raw_similarity=raw)


def typed_forward(
    V: FeatureInput,
    g: RelationGraph,
    p: TypedGatParams,
    direction_mode: Optional[str] = None,
    aggregation: Optional[str] = None,
) -> Tuple[RegionFeatureSet, AttentionMap]:
    state = _forward_state(feature_matrix(V), g, p, direction_mode, aggregation)
    attention = _attention_map(g.n, state["edges"], state["weights"], state["scores"])
    return RegionFeatureSet(state["v_star"]), attention


def typed_backward(
    V: FeatureInput,
    g: RelationGraph,
    p: TypedGatParams,
    upstream: np.ndarray,
    direction_mode: Optional[str] = None,
    aggregation: Optional[str] = None,
) -> Dict[str, np.ndarray]:
    """Gradients w.r.t. every TypedGatParams tensor (to_arrays names) and V"""
    X = feature_matrix(V)
    state = _forward_state(X, g, p, direction_mode, aggregation)
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != state["v_star"].shape:
        raise ShapeError.mismatch("typed upstream gradient", upstream.shape, state["v_star"].shape)

    edges = state["edges"]
    tgt, src, label_index = edges.target, edges.source, edges.label_index
    weights = state["weights"]
    n, d = X.shape

    per_edge_upstream = upstream[tgt]
    d_messages = weights[:, None] * per_edge_upstream
    d_weights = (per_edge_upstream * state["messages"]).sum(axis=1)

    if state["aggregation"] == "attention":
        row_dot = np.zeros(n)
        np.add.at(row_dot, tgt, weights * d_weights)
        d_scores = weights * (d_weights - row_dot[tgt])
    else:
        d_scores = np.zeros_like(weights)

    d_biases = np.zeros((len(edges.label_names), d))
    np.add.at(d_biases, label_index, d_messages)
    d_offsets = np.zeros(len(edges.label_names))
    np.add.at(d_offsets, label_index, d_scores)

    d_keys = np.zeros((n, d))
    np.add.at(d_keys, tgt, d_scores[:, None] * state["projected"])
    d_projected = d_scores[:, None] * state["keys"][tgt]

    grads: Dict[str, np.ndarray] = {}
    grad_X = d_keys @ p.W_K
    for k, name in enumerate(DIRECTIONS):
        sel = edges.direction == k
        sources = X[src[sel]]
        grads[f"W_dir.{name}"] = d_messages[sel].T @ sources
        grads[f"Wv_dir.{name}"] = d_projected[sel].T @ sources
        np.add.at(grad_X, src[sel], d_messages[sel] @ p.W_dir[name] + d_projected[sel] @ p.Wv_dir[name])
    grads["W_K"] = d_keys.T @ X

    positions = {name: k for k, name in enumerate(edges.label_names)}
    for label in sorted(p.b_lab):
        k = positions.get(label)
        grads[f"b_lab.{label}"] = d_biases[k] if k is not None else np.zeros(d)
    for label in sorted(p.c_lab):
        k = positions.get(label)
        grads[f"c_lab.{label}"] = np.array(d_offsets[k] if k is not None else 0.0)

    ordered = {name: grads[name] for name in p.to_arrays()}
    ordered["V"] = grad_X
    return ordered
