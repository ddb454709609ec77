"""
Relationship graphs over detected objects: implicit, spatial and semantic variants
"""
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.config import settings
from src.core.exceptions import DomainError, EmptyGraphError, InputError
from src.services.geometry import (
    DetectedObject,
    SpatialLabel,
    complement_label,
    spatial_classify,
)

logger = logging.getLogger(__name__)

NO_RELATION_CLASS = 0
DISTRIBUTION_TOLERANCE = 1e-6


class EdgeKind(str, Enum):
    IMPLICIT = "implicit"
    SPATIAL = "spatial"
    SEMANTIC = "semantic"
    SELF_LOOP = "self_loop"


class GraphVariant(str, Enum):
    IMPLICIT = "implicit"
    SPATIAL = "spatial"
    SEMANTIC = "semantic"


@dataclass(frozen=True, order=True)
class EdgeLabel:
    kind: EdgeKind
    class_id: int = 0

    def __post_init__(self):
        if self.kind == EdgeKind.SPATIAL:
            if not SpatialLabel.INSIDE <= self.class_id <= SpatialLabel.ANGLE_315:
                raise DomainError(f"spatial edges need a relation class, got {self.class_id}")
        elif self.kind == EdgeKind.SEMANTIC:
            if not 1 <= self.class_id < settings.SEMANTIC_CLASSES:
                raise DomainError(f"semantic class {self.class_id} outside 1..{settings.SEMANTIC_CLASSES - 1}")

    @property
    def name(self) -> str:
        if self.kind == EdgeKind.SPATIAL:
            return SpatialLabel(self.class_id).label_name
        if self.kind == EdgeKind.SEMANTIC:
            return f"semantic_{self.class_id}"
        return self.kind.value

    @classmethod
    def implicit(cls) -> "EdgeLabel":
        return cls(EdgeKind.IMPLICIT)

    @classmethod
    def self_loop(cls) -> "EdgeLabel":
        return cls(EdgeKind.SELF_LOOP)

    @classmethod
    def spatial(cls, label: SpatialLabel) -> "EdgeLabel":
        return cls(EdgeKind.SPATIAL, int(label))

    @classmethod
    def semantic(cls, class_id: int) -> "EdgeLabel":
        return cls(EdgeKind.SEMANTIC, int(class_id))


def labels_for_variant(variant: GraphVariant) -> List[EdgeLabel]:
    """Every label a graph of this variant can carry, in a fixed order"""
    if variant == GraphVariant.IMPLICIT:
        return [EdgeLabel.implicit()]
    if variant == GraphVariant.SPATIAL:
        return [EdgeLabel.spatial(c) for c in SpatialLabel.relation_labels()] + [EdgeLabel.self_loop()]
    return [EdgeLabel.semantic(c) for c in range(1, settings.SEMANTIC_CLASSES)] + [EdgeLabel.self_loop()]


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    label: EdgeLabel


@dataclass(frozen=True)
class RelationGraph:
    n: int
    variant: GraphVariant
    edges: Tuple[Edge, ...]
    _incoming: Dict[int, Tuple[Tuple[int, EdgeLabel], ...]] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )

    def __post_init__(self):
        if self.n < 1:
            raise EmptyGraphError("a relation graph needs at least one node")
        ordered = tuple(sorted(self.edges, key=lambda e: (e.src, e.dst, e.label)))
        object.__setattr__(self, "edges", ordered)
        self._validate()

        incoming = defaultdict(list)
        for edge in ordered:
            incoming[edge.dst].append((edge.src, edge.label))
        for dst in incoming:
            incoming[dst].sort(key=lambda item: (item[0], item[1]))
        object.__setattr__(self, "_incoming", {k: tuple(v) for k, v in incoming.items()})

    def _validate(self):
        seen = set()
        for edge in self.edges:
            if not (0 <= edge.src < self.n and 0 <= edge.dst < self.n):
                raise InputError(f"edge ({edge.src}, {edge.dst}) outside node range 0..{self.n - 1}")
            key = (edge.src, edge.dst, edge.label)
            if key in seen:
                raise InputError(f"duplicate edge ({edge.src}, {edge.dst}, {edge.label.name})")
            seen.add(key)
            is_self = edge.label.kind == EdgeKind.SELF_LOOP
            if is_self != (edge.src == edge.dst):
                raise InputError(f"edge ({edge.src}, {edge.dst}, {edge.label.name}) mixes self-loop and pair")

        if self.variant == GraphVariant.IMPLICIT:
            if len(self.edges) != self.n * (self.n - 1) or any(
                e.label.kind != EdgeKind.IMPLICIT for e in self.edges
            ):
                raise InputError("implicit graphs hold exactly the n(n-1) ordered pairs")
            return

        expected_kind = EdgeKind.SPATIAL if self.variant == GraphVariant.SPATIAL else EdgeKind.SEMANTIC
        loops = [e.src for e in self.edges if e.label.kind == EdgeKind.SELF_LOOP]
        if sorted(loops) != list(range(self.n)):
            raise InputError(f"{self.variant.value} graphs need exactly one self-loop per node")
        for edge in self.edges:
            if edge.label.kind not in (expected_kind, EdgeKind.SELF_LOOP):
                raise InputError(f"{edge.label.name} edge in a {self.variant.value} graph")

        if self.variant == GraphVariant.SPATIAL:
            for edge in self.edges:
                if edge.label.kind != EdgeKind.SPATIAL:
                    continue
                mirror = (edge.dst, edge.src, EdgeLabel.spatial(complement_label(SpatialLabel(edge.label.class_id))))
                if mirror not in seen:
                    raise InputError(f"spatial edge ({edge.src}, {edge.dst}) lacks its mirror edge")

    def in_neighbors(self, i: int) -> List[Tuple[int, EdgeLabel]]:
        if not 0 <= i < self.n:
            raise IndexError(f"node {i} outside 0..{self.n - 1}")
        return list(self._incoming.get(i, ()))

    def adjacency(self) -> np.ndarray:
        """Boolean n x n mask, entry [i, j] set when j -> i is an edge"""
        mask = np.zeros((self.n, self.n), dtype=bool)
        for edge in self.edges:
            mask[edge.dst, edge.src] = True
        return mask

    def external_edges(self) -> List[Edge]:
        return [e for e in self.edges if e.label.kind != EdgeKind.SELF_LOOP]


def in_neighbors(g: RelationGraph, i: int) -> List[Tuple[int, EdgeLabel]]:
    return g.in_neighbors(i)


def build_implicit(n: int) -> RelationGraph:
    if n < 1:
        raise EmptyGraphError("implicit graph needs at least one node")
    label = EdgeLabel.implicit()
    edges = tuple(Edge(i, j, label) for i in range(n) for j in range(n) if i != j)
    return RelationGraph(n=n, variant=GraphVariant.IMPLICIT, edges=edges)


def _self_loops(n: int) -> List[Edge]:
    label = EdgeLabel.self_loop()
    return [Edge(i, i, label) for i in range(n)]


def build_spatial(
    objects: Sequence[DetectedObject],
    image_diag: float,
    iou_threshold: Optional[float] = None,
    distance_ratio: Optional[float] = None,
) -> RelationGraph:
    n = len(objects)
    if n < 1:
        raise EmptyGraphError("spatial graph needs at least one object")

    edges = _self_loops(n)
    for i in range(n):
        for j in range(i + 1, n):
            label = spatial_classify(objects[i], objects[j], image_diag, iou_threshold, distance_ratio)
            if label == SpatialLabel.NO_RELATION:
                continue
            edges.append(Edge(i, j, EdgeLabel.spatial(label)))
            edges.append(Edge(j, i, EdgeLabel.spatial(complement_label(label))))

    logger.debug(f"Spatial graph over {n} objects has {len(edges) - n} relation edges")
    return RelationGraph(n=n, variant=GraphVariant.SPATIAL, edges=tuple(edges))


def build_semantic(
    n: int,
    edge_predictions: Sequence[Tuple[int, int, Sequence[float]]],
    threshold: Optional[float] = None,
) -> RelationGraph:
    """Semantic graph from per-pair class distributions.

    Pairs whose argmax is a relation class with probability at or above the
    threshold become directed edges; pairs not listed get no edge.
    """
    if threshold is None:
        threshold = settings.SEMANTIC_THRESHOLD
    if n < 1:
        raise EmptyGraphError("semantic graph needs at least one node")

    edges = _self_loops(n)
    seen_pairs = set()
    for src, dst, probs in edge_predictions:
        if src == dst:
            raise InputError(f"semantic prediction for self-pair ({src}, {dst})")
        if (src, dst) in seen_pairs:
            raise InputError(f"duplicate semantic prediction for ({src}, {dst})")
        seen_pairs.add((src, dst))

        p = np.asarray(probs, dtype=np.float64)
        if p.shape != (settings.SEMANTIC_CLASSES,):
            raise InputError(f"pair ({src}, {dst}): expected {settings.SEMANTIC_CLASSES} probabilities, got {p.shape}")
        if np.any(p < 0) or not np.all(np.isfinite(p)) or abs(p.sum() - 1.0) > DISTRIBUTION_TOLERANCE:
            raise InputError(f"pair ({src}, {dst}): probabilities do not form a distribution")

        best = int(np.argmax(p))
        if best != NO_RELATION_CLASS and p[best] >= threshold:
            edges.append(Edge(int(src), int(dst), EdgeLabel.semantic(best)))

    return RelationGraph(n=n, variant=GraphVariant.SEMANTIC, edges=tuple(edges))


def permute_graph(g: RelationGraph, perm: Sequence[int]) -> RelationGraph:
    """Relabel nodes so that old node k becomes node perm[k]"""
    perm = list(perm)
    if sorted(perm) != list(range(g.n)):
        raise DomainError("perm must be a permutation of 0..n-1")
    edges = tuple(Edge(perm[e.src], perm[e.dst], e.label) for e in g.edges)
    return RelationGraph(n=g.n, variant=g.variant, edges=edges)
