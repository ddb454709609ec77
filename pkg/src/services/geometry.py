"""
Bounding-box geometry: IoU, union boxes, relative geometry features, their
sinusoidal embedding, and the rule-based spatial relationship classifier.

Boxes are center-format (cx, cy, w, h) in pixels. Angles are measured in the
image frame from the center of the first box to the center of the second
(0 deg along +x, 90 deg along +y, i.e. downwards on screen).
"""
import logging
import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional, Sequence

import numpy as np

from src.core.config import settings
from src.core.exceptions import ConfigurationError, DomainError

logger = logging.getLogger(__name__)

UNION_CATEGORY = -1
OCTANT_WIDTH = 45.0


@dataclass(frozen=True)
class DetectedObject:
    cx: float
    cy: float
    w: float
    h: float
    category: int = 0

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise DomainError(f"box width and height must be positive, got {self.w}x{self.h}")

    @property
    def x1(self) -> float:
        return self.cx - self.w / 2.0

    @property
    def x2(self) -> float:
        return self.cx + self.w / 2.0

    @property
    def y1(self) -> float:
        return self.cy - self.h / 2.0

    @property
    def y2(self) -> float:
        return self.cy + self.h / 2.0

    @property
    def area(self) -> float:
        return self.w * self.h

    def as_bbox(self) -> list:
        return [float(self.cx), float(self.cy), float(self.w), float(self.h)]

    @classmethod
    def from_corners(cls, x1: float, y1: float, x2: float, y2: float, category: int = 0) -> "DetectedObject":
        return cls((x1 + x2) / 2.0, (y1 + y2) / 2.0, x2 - x1, y2 - y1, category)


class SpatialLabel(IntEnum):
    NO_RELATION = 0
    INSIDE = 1
    COVER = 2
    OVERLAP = 3
    ANGLE_0 = 4
    ANGLE_45 = 5
    ANGLE_90 = 6
    ANGLE_135 = 7
    ANGLE_180 = 8
    ANGLE_225 = 9
    ANGLE_270 = 10
    ANGLE_315 = 11

    @property
    def label_name(self) -> str:
        return self.name.lower()

    @classmethod
    def from_name(cls, name: str) -> "SpatialLabel":
        try:
            return cls[name.upper()]
        except KeyError:
            raise DomainError(f"unknown spatial label '{name}'")

    @classmethod
    def relation_labels(cls) -> list:
        return [label for label in cls if label != cls.NO_RELATION]


def iou(a: DetectedObject, b: DetectedObject) -> float:
    inter_w = max(0.0, min(a.x2, b.x2) - max(a.x1, b.x1))
    inter_h = max(0.0, min(a.y2, b.y2) - max(a.y1, b.y1))
    intersection = inter_w * inter_h
    union = a.area + b.area - intersection
    return intersection / union


def union_box(a: DetectedObject, b: DetectedObject) -> DetectedObject:
    return DetectedObject.from_corners(
        min(a.x1, b.x1),
        min(a.y1, b.y1),
        max(a.x2, b.x2),
        max(a.y2, b.y2),
        category=UNION_CATEGORY,
    )


def pairwise_geometry_features(objects: Sequence[DetectedObject], epsilon: Optional[float] = None) -> np.ndarray:
    """Relative geometry of every ordered pair as an n x n x 4 array.

    Entry [i, j] is (log(|x_i - x_j| / w_i), log(|y_i - y_j| / h_i),
    log(w_j / w_i), log(h_j / h_i)) with the offsets clamped below by epsilon.
    """
    if epsilon is None:
        epsilon = settings.GEOMETRY_EPSILON
    boxes = np.array([[o.cx, o.cy, o.w, o.h] for o in objects], dtype=np.float64).reshape(-1, 4)
    cx, cy, w, h = boxes.T

    dx = np.maximum(np.abs(cx[:, None] - cx[None, :]), epsilon)
    dy = np.maximum(np.abs(cy[:, None] - cy[None, :]), epsilon)
    return np.stack(
        [
            np.log(dx / w[:, None]),
            np.log(dy / h[:, None]),
            np.log(w[None, :] / w[:, None]),
            np.log(h[None, :] / h[:, None]),
        ],
        axis=-1,
    )


def geometry_feature(o_i: DetectedObject, o_j: DetectedObject, epsilon: Optional[float] = None) -> np.ndarray:
    if epsilon is None:
        epsilon = settings.GEOMETRY_EPSILON
    dx = max(abs(o_i.cx - o_j.cx), epsilon)
    dy = max(abs(o_i.cy - o_j.cy), epsilon)
    return np.array(
        [
            math.log(dx / o_i.w),
            math.log(dy / o_i.h),
            math.log(o_j.w / o_i.w),
            math.log(o_j.h / o_i.h),
        ]
    )


def sinusoidal_embed(g: np.ndarray, d_g: Optional[int] = None, base: Optional[float] = None) -> np.ndarray:
    """Sine/cosine embedding of geometry features.

    Works on the trailing axis of size 4, so a single feature or a whole n x n
    grid can be embedded at once. For component m and k < d_g / 8 the output
    holds sin(g_m / base^(8k/d_g)) then cos(...), ordered by (m, k).
    """
    if d_g is None:
        d_g = settings.GEOMETRY_EMBED_DIM
    if base is None:
        base = settings.EMBED_WAVELENGTH_BASE
    if d_g <= 0 or d_g % 8 != 0:
        raise ConfigurationError(f"embedding width d_g={d_g} must be a positive multiple of 8")

    g = np.asarray(g, dtype=np.float64)
    if g.shape[-1] != 4:
        raise ConfigurationError(f"geometry features must have 4 components, got {g.shape[-1]}")

    k = np.arange(d_g // 8, dtype=np.float64)
    wavelengths = np.power(base, 8.0 * k / d_g)
    angles = g[..., :, None] / wavelengths
    embedded = np.stack([np.sin(angles), np.cos(angles)], axis=-1)
    return embedded.reshape(g.shape[:-1] + (d_g,))


def strictly_inside(inner: DetectedObject, outer: DetectedObject) -> bool:
    return inner.x1 > outer.x1 and inner.x2 < outer.x2 and inner.y1 > outer.y1 and inner.y2 < outer.y2


def _upper_half_octant(dx: float, dy: float) -> int:
    # angle in [0, 180); boundary angles go to the lower octant
    theta = math.degrees(math.atan2(dy, dx))
    return max(0, math.ceil((theta - OCTANT_WIDTH / 2.0) / OCTANT_WIDTH))


def octant(dx: float, dy: float) -> int:
    """Octant index 0..7 of a nonzero offset, octant k centered at k * 45 deg.

    The lower half-plane is the mirror of the upper one, so opposite offsets
    always land in octants four apart.
    """
    if dy > 0 or (dy == 0 and dx > 0):
        return _upper_half_octant(dx, dy) % 8
    return (_upper_half_octant(-dx, -dy) + 4) % 8


def spatial_classify(
    o_i: DetectedObject,
    o_j: DetectedObject,
    image_diag: float,
    iou_threshold: Optional[float] = None,
    distance_ratio: Optional[float] = None,
) -> SpatialLabel:
    if iou_threshold is None:
        iou_threshold = settings.OVERLAP_IOU_THRESHOLD
    if distance_ratio is None:
        distance_ratio = settings.DISTANCE_RATIO
    if not image_diag > 0:
        raise DomainError(f"image diagonal must be positive, got {image_diag}")

    if strictly_inside(o_i, o_j):
        return SpatialLabel.INSIDE
    if strictly_inside(o_j, o_i):
        return SpatialLabel.COVER
    if iou(o_i, o_j) >= iou_threshold:
        return SpatialLabel.OVERLAP

    dx = o_j.cx - o_i.cx
    dy = o_j.cy - o_i.cy
    if math.hypot(dx, dy) > distance_ratio * image_diag:
        return SpatialLabel.NO_RELATION
    if dx == 0 and dy == 0:
        # coincident centers: boxes intersect, the angle is undefined
        return SpatialLabel.OVERLAP
    return SpatialLabel(SpatialLabel.ANGLE_0 + octant(dx, dy))


def complement_label(c: SpatialLabel) -> SpatialLabel:
    c = SpatialLabel(c)
    if c == SpatialLabel.NO_RELATION:
        raise DomainError("no-relation has no complement")
    if c == SpatialLabel.INSIDE:
        return SpatialLabel.COVER
    if c == SpatialLabel.COVER:
        return SpatialLabel.INSIDE
    if c == SpatialLabel.OVERLAP:
        return SpatialLabel.OVERLAP
    return SpatialLabel(SpatialLabel.ANGLE_0 + (c - SpatialLabel.ANGLE_0 + 4) % 8)


def image_diagonal(width: float, height: float) -> float:
    return math.hypot(width, height)
