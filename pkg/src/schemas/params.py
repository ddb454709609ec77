"""
Pydantic schemas for parameter files
"""
import math
from typing import List
from pydantic import BaseModel, Field, model_validator

from src.schemas.response import VersionedDocument


class TensorRecord(BaseModel):
    name: str
    shape: List[int]
    data: List[float]

    @model_validator(mode="after")
    def validate_size(self):
        expected = math.prod(self.shape)
        if len(self.data) != expected:
            raise ValueError(f"tensor {self.name}: {len(self.data)} values for shape {self.shape}")
        return self


class ParameterDims(BaseModel):
    d: int = Field(..., gt=0)
    d_g: int = Field(..., gt=0)
    d_model: int = Field(..., gt=0)
    heads: int = Field(..., gt=0)
    semantic_classes: int = Field(16, gt=1)


class ParameterFile(VersionedDocument):
    seed: int
    dims: ParameterDims
    tensors: List[TensorRecord]
