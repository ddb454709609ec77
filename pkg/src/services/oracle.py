"""
Naive double-loop reference implementations of both graph attention passes.

Everything is computed entry by entry in plain Python floats, one node and one
neighbor at a time, so the vectorized paths can be checked against it.
"""
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.core.config import settings
from src.services.geometry import DetectedObject, geometry_feature, sinusoidal_embed
from src.services.graph import EdgeKind, RelationGraph
from src.services.implicit_gat import ImplicitGatParams
from src.services.typed_gat import TypedGatParams


def _matvec(m: np.ndarray, v: Sequence[float]) -> List[float]:
    rows, cols = m.shape
    out = []
    for r in range(rows):
        total = 0.0
        for c in range(cols):
            total += float(m[r, c]) * float(v[c])
        out.append(total)
    return out


def _dot(a: Sequence[float], b: Sequence[float]) -> float:
    total = 0.0
    for x, y in zip(a, b):
        total += x * y
    return total


def implicit_reference(
    X: np.ndarray,
    objects: Sequence[DetectedObject],
    g: RelationGraph,
    p: ImplicitGatParams,
) -> Tuple[np.ndarray, np.ndarray]:
    n, d = X.shape
    v_star = np.zeros((n, d))
    weights = np.zeros((n, n))

    for i in range(n):
        key = _matvec(p.W_K, X[i])
        entries = []
        for j, _ in g.in_neighbors(i):
            embedded = sinusoidal_embed(geometry_feature(objects[i], objects[j]), p.d_g)
            gate = max(0.0, _dot([float(w) for w in p.W_bG[0]], [float(e) for e in embedded]))
            similarity = _dot(key, _matvec(p.W_Q, X[j]))
            entries.append((j, gate, similarity))

        supported = [(j, gate, s) for j, gate, s in entries if gate > 0.0]
        if not supported:
            continue
        top = max(s for _, _, s in supported)
        total = 0.0
        for _, gate, s in supported:
            total += gate * math.exp(s - top)
        for j, gate, s in supported:
            w = gate * math.exp(s - top) / total
            weights[i, j] = w
            value = _matvec(p.W, X[j])
            for c in range(d):
                v_star[i, c] += w * value[c]
    return v_star, weights


def typed_reference(
    X: np.ndarray,
    g: RelationGraph,
    p: TypedGatParams,
    direction_mode: Optional[str] = None,
    aggregation: Optional[str] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    if direction_mode is None:
        direction_mode = settings.TYPED_DIRECTION_MODE
    if aggregation is None:
        aggregation = settings.TYPED_AGGREGATION
    n, d = X.shape
    v_star = np.zeros((n, d))
    weights = np.zeros((n, n))

    for i in range(n):
        neighborhood = []
        for j, label in g.in_neighbors(i):
            direction = "self" if label.kind == EdgeKind.SELF_LOOP else "forward"
            neighborhood.append((j, direction, label.name))
        if direction_mode == "bidirectional":
            for edge in g.edges:
                if edge.src == i and edge.label.kind != EdgeKind.SELF_LOOP:
                    neighborhood.append((edge.dst, "backward", edge.label.name))

        key = _matvec(p.W_K, X[i])
        scored = []
        for j, direction, label in neighborhood:
            score = _dot(key, _matvec(p.Wv_dir[direction], X[j])) + p.c_lab[label]
            scored.append((j, direction, label, score))

        if aggregation == "uniform":
            coefficients = [1.0 / len(scored)] * len(scored)
        else:
            top = max(s for *_, s in scored)
            total = 0.0
            for *_, s in scored:
                total += math.exp(s - top)
            coefficients = [math.exp(s - top) / total for *_, s in scored]

        for (j, direction, label, _), w in zip(scored, coefficients):
            weights[i, j] += w
            message = _matvec(p.W_dir[direction], X[j])
            bias = p.b_lab[label]
            for c in range(d):
                v_star[i, c] += w * (message[c] + float(bias[c]))
    return v_star, weights
