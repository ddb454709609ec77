"""
Pydantic schema for detection files (regions, boxes and features of one image)
"""
from typing import List, Optional
from pydantic import BaseModel, Field, field_validator, model_validator

from src.schemas.response import VersionedDocument


class Region(BaseModel):
    bbox: List[float] = Field(..., min_length=4, max_length=4, description="Center-format box [cx, cy, w, h] in pixels")
    category: int = Field(..., description="Detector category label")
    feature: List[float] = Field(..., min_length=1, description="Region-level feature vector")

    @field_validator("bbox")
    @classmethod
    def validate_bbox(cls, v):
        if v[2] <= 0 or v[3] <= 0:
            raise ValueError(f"box width and height must be positive, got {v[2]}x{v[3]}")
        return v


class UnionFeature(BaseModel):
    src: int = Field(..., ge=0)
    dst: int = Field(..., ge=0)
    feature: List[float]


class DetectionFile(VersionedDocument):
    image_id: str
    image_width: float = Field(..., gt=0)
    image_height: float = Field(..., gt=0)
    regions: List[Region] = Field(..., min_length=1)
    union_features: Optional[List[UnionFeature]] = Field(
        None, description="Optional pooled features of union boxes per ordered pair"
    )

    @model_validator(mode="after")
    def validate_dimensions(self):
        d = len(self.regions[0].feature)
        for index, region in enumerate(self.regions):
            if len(region.feature) != d:
                raise ValueError(
                    f"regions[{index}].feature has length {len(region.feature)}, expected {d}"
                )
        n = len(self.regions)
        for index, union in enumerate(self.union_features or []):
            if union.src >= n or union.dst >= n:
                raise ValueError(f"union_features[{index}] refers to a region outside 0..{n - 1}")
            if len(union.feature) != d:
                raise ValueError(
                    f"union_features[{index}].feature has length {len(union.feature)}, expected {d}"
                )
        return self