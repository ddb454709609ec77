"""
Pydantic schemas for edge lists, refined features and attention exports
"""
from typing import List, Optional
from pydantic import BaseModel, Field

from src.schemas.response import VersionedDocument


class EdgeRecord(BaseModel):
    src: int
    dst: int
    label_name: str
    label_id: int
    score: Optional[float] = None


class EdgeListDocument(VersionedDocument):
    image_id: str
    mode: str
    threshold: Optional[float] = None
    edges: List[EdgeRecord]


class AttentionRecord(BaseModel):
    graph: str
    weights: List[List[float]]
    raw_similarity: List[List[float]]
    geometry_gate: Optional[List[List[float]]] = None


class FeatureRecord(BaseModel):
    graph: str
    refined_features: List[List[float]]


class FeaturesDocument(VersionedDocument):
    image_id: str
    graphs: List[FeatureRecord]


class AttentionDocument(VersionedDocument):
    image_id: str
    graphs: List[AttentionRecord]


class EncodeDocument(VersionedDocument):
    features: FeaturesDocument
    attention: AttentionDocument


class TopKEntry(BaseModel):
    source: int
    weight: float
    bbox: List[float]


class NodeTopK(BaseModel):
    node: int
    bbox: List[float]
    self_weight: Optional[float] = Field(None, description="Self-loop weight of typed graphs")
    top: List[TopKEntry]


class TopKDocument(VersionedDocument):
    image_id: str
    graph: str
    top_k: int
    nodes: List[NodeTopK]
