"""
Region feature sets, attention maps and residual feature refinement
"""
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from src.core.exceptions import ShapeError


@dataclass(frozen=True)
class RegionFeatureSet:
    features: np.ndarray

    def __post_init__(self):
        features = np.ascontiguousarray(self.features, dtype=np.float64)
        if features.ndim != 2:
            raise ShapeError(f"region features must be an n x d matrix, got shape {features.shape}")
        if not np.all(np.isfinite(features)):
            raise ShapeError("region features must be finite")
        object.__setattr__(self, "features", features)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


FeatureInput = Union[RegionFeatureSet, np.ndarray]


def feature_matrix(V: FeatureInput) -> np.ndarray:
    if isinstance(V, RegionFeatureSet):
        return V.features
    return RegionFeatureSet(np.asarray(V)).features


@dataclass(frozen=True)
class AttentionMap:
    """Attention coefficients of one GAT pass.

    ``weights[i, j]`` is the weight node i puts on node j; each row sums to 1
    or is all zero when the node has no support.
    """

    weights: np.ndarray
    raw_similarity: np.ndarray
    geometry_gate: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def empty_rows(self) -> np.ndarray:
        return ~np.any(self.weights != 0.0, axis=1)


def refine(V: FeatureInput, v_star: FeatureInput) -> RegionFeatureSet:
    """v'_i = v_i + v*_i"""
    base = feature_matrix(V)
    context = feature_matrix(v_star)
    if base.shape != context.shape:
        raise ShapeError.mismatch("refine", base.shape, context.shape)
    return RegionFeatureSet(base + context)
