"""
Relation encoder service: detection file in, relation graphs, refined
features and attention maps out.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.config import settings
from src.core.exceptions import ConfigurationError, ShapeError, UsageError
from src.schemas.detection import DetectionFile
from src.schemas.encoding import (
    AttentionDocument,
    AttentionRecord,
    EdgeListDocument,
    EdgeRecord,
    EncodeDocument,
    FeatureRecord,
    FeaturesDocument,
    NodeTopK,
    TopKDocument,
    TopKEntry,
)
from src.services.encoder import AttentionMap, RegionFeatureSet, refine
from src.services.geometry import DetectedObject, image_diagonal
from src.services.graph import (
    EdgeKind,
    RelationGraph,
    build_implicit,
    build_semantic,
    build_spatial,
)
from src.services.implicit_gat import implicit_forward
from src.services.param_store import ParameterSet
from src.services.semantic_classifier import predict_pairs
from src.services.typed_gat import typed_forward

logger = logging.getLogger(__name__)

PairPrediction = Tuple[int, int, np.ndarray]
KIND_GROUPS = {"imp": "implicit", "spa": "spatial", "sem": "semantic"}


@dataclass(frozen=True)
class DetectionInputs:
    image_id: str
    objects: Tuple[DetectedObject, ...]
    features: RegionFeatureSet
    image_diag: float
    union_features: Dict[Tuple[int, int], np.ndarray] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.objects)

    @classmethod
    def from_document(cls, document: DetectionFile) -> "DetectionInputs":
        objects = tuple(
            DetectedObject(*region.bbox, category=region.category) for region in document.regions
        )
        features = RegionFeatureSet(np.array([region.feature for region in document.regions], dtype=np.float64))
        unions = {
            (u.src, u.dst): np.asarray(u.feature, dtype=np.float64) for u in document.union_features or []
        }
        return cls(
            image_id=document.image_id,
            objects=objects,
            features=features,
            image_diag=image_diagonal(document.image_width, document.image_height),
            union_features=unions,
        )


@dataclass
class GraphEncoding:
    kind: str
    graph: RelationGraph
    v_star: RegionFeatureSet
    refined: RegionFeatureSet
    attention: AttentionMap


class RelationEncoder:
    """Runs the implicit, spatial and semantic relation encoders over one image"""

    def __init__(
        self,
        params: Optional[ParameterSet] = None,
        threshold: Optional[float] = None,
        direction_mode: Optional[str] = None,
        aggregation: Optional[str] = None,
    ):
        self.params = params
        self.threshold = settings.SEMANTIC_THRESHOLD if threshold is None else threshold
        self.direction_mode = direction_mode
        self.aggregation = aggregation

    def _params(self) -> ParameterSet:
        if self.params is None:
            raise UsageError("this operation needs a parameter file (--params/--weights)")
        return self.params

    def predict_semantic(self, inputs: DetectionInputs) -> List[PairPrediction]:
        classifier = self._params().require("classifier")
        return predict_pairs(inputs.features.features, inputs.union_features, classifier)

    def build_graph(
        self, kind: str, inputs: DetectionInputs, predictions: Optional[Sequence[PairPrediction]] = None
    ) -> RelationGraph:
        if kind == "imp":
            return build_implicit(inputs.n)
        if kind == "spa":
            return build_spatial(inputs.objects, inputs.image_diag)
        if kind == "sem":
            if predictions is None:
                predictions = self.predict_semantic(inputs)
            return build_semantic(inputs.n, predictions, self.threshold)
        raise ConfigurationError(f"unknown graph kind '{kind}' (expected one of {settings.GRAPH_KINDS})")

    def encode_graph(self, kind: str, inputs: DetectionInputs) -> GraphEncoding:
        group = KIND_GROUPS.get(kind)
        if group is None:
            raise ConfigurationError(f"unknown graph kind '{kind}' (expected one of {settings.GRAPH_KINDS})")
        group_params = self._params().require(group)
        if group_params.d != inputs.features.d:
            raise ShapeError(
                f"regions[].feature has dimension {inputs.features.d}, {group} parameters expect {group_params.d}"
            )

        graph = self.build_graph(kind, inputs)
        if kind == "imp":
            v_star, attention = implicit_forward(inputs.features, inputs.objects, graph, group_params)
        else:
            v_star, attention = typed_forward(
                inputs.features,
                graph,
                group_params,
                direction_mode=self.direction_mode,
                aggregation=self.aggregation,
            )
        logger.debug(f"Encoded {kind} graph of {inputs.image_id}: {len(graph.edges)} edges")
        return GraphEncoding(
            kind=kind,
            graph=graph,
            v_star=v_star,
            refined=refine(inputs.features, v_star),
            attention=attention,
        )

    def encode(self, inputs: DetectionInputs, kinds: Sequence[str]) -> List[GraphEncoding]:
        results = [self.encode_graph(kind, inputs) for kind in kinds]
        logger.info(f"Encoded {len(results)} graph(s) for image {inputs.image_id}")
        return results

    def relations(self, inputs: DetectionInputs, mode: str) -> EdgeListDocument:
        """Edge list of the spatial or semantic graph, self-loops omitted"""
        if mode == "spatial":
            graph = self.build_graph("spa", inputs)
            records = [
                EdgeRecord(src=e.src, dst=e.dst, label_name=e.label.name, label_id=e.label.class_id)
                for e in graph.external_edges()
            ]
            return EdgeListDocument(image_id=inputs.image_id, mode=mode, edges=records)
        if mode == "semantic":
            predictions = self.predict_semantic(inputs)
            probs = {(i, j): p for i, j, p in predictions}
            graph = self.build_graph("sem", inputs, predictions)
            records = [
                EdgeRecord(
                    src=e.src,
                    dst=e.dst,
                    label_name=e.label.name,
                    label_id=e.label.class_id,
                    score=float(probs[(e.src, e.dst)][e.label.class_id]),
                )
                for e in graph.external_edges()
                if e.label.kind == EdgeKind.SEMANTIC
            ]
            return EdgeListDocument(image_id=inputs.image_id, mode=mode, threshold=self.threshold, edges=records)
        raise UsageError(f"unknown relation mode '{mode}'")


def encode_documents(image_id: str, encodings: Sequence[GraphEncoding]) -> EncodeDocument:
    features = FeaturesDocument(
        image_id=image_id,
        graphs=[FeatureRecord(graph=e.kind, refined_features=e.refined.features.tolist()) for e in encodings],
    )
    attention = AttentionDocument(
        image_id=image_id,
        graphs=[
            AttentionRecord(
                graph=e.kind,
                weights=e.attention.weights.tolist(),
                raw_similarity=e.attention.raw_similarity.tolist(),
                geometry_gate=None if e.attention.geometry_gate is None else e.attention.geometry_gate.tolist(),
            )
            for e in encodings
        ],
    )
    return EncodeDocument(features=features, attention=attention)


def top_k_attention(inputs: DetectionInputs, encoding: GraphEncoding, top_k: Optional[int] = None) -> TopKDocument:
    """Strongest incoming attention per node, descending, ties by ascending source.

    Self-loop weights of typed graphs are reported separately; sources with
    zero weight are omitted.
    """
    top_k = settings.TOP_K if top_k is None else top_k
    if top_k < 1:
        raise UsageError(f"top_k must be at least 1, got {top_k}")
    if top_k > inputs.n - 1:
        logger.warning(f"top_k={top_k} exceeds the {inputs.n - 1} other regions, clamping")
        top_k = inputs.n - 1

    weights = encoding.attention.weights
    typed = encoding.kind != "imp"
    nodes = []
    for i in range(inputs.n):
        ranked = sorted(
            (j for j in range(inputs.n) if j != i and weights[i, j] > 0.0),
            key=lambda j: (-weights[i, j], j),
        )[:top_k]
        nodes.append(
            NodeTopK(
                node=i,
                bbox=inputs.objects[i].as_bbox(),
                self_weight=float(weights[i, i]) if typed else None,
                top=[
                    TopKEntry(source=j, weight=float(weights[i, j]), bbox=inputs.objects[j].as_bbox())
                    for j in ranked
                ],
            )
        )
    return TopKDocument(image_id=inputs.image_id, graph=encoding.kind, top_k=top_k, nodes=nodes)
