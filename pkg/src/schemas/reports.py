"""
Pydantic schemas for verification reports, fusion results and sweep grids
"""
from typing import Annotated, List, Optional
from pydantic import BaseModel, Field

from src.schemas.response import VersionedDocument


class GradReport(BaseModel):
    parameter_name: str
    # null when an evaluation was non-finite
    max_relative_error: Optional[Annotated[float, Field(ge=0.0)]]
    worst_index: List[int] = Field(default_factory=list, description="Coordinate of the worst entry")
    valid: bool = True


class GradcheckDocument(VersionedDocument):
    graph: str
    seed: int
    n: int
    d: int
    d_g: int
    step: float
    tolerance: float
    fault_injected: bool = False
    passed: bool
    reports: List[GradReport]


class OracleCase(BaseModel):
    graph: str
    seed: int
    n: int
    d: int
    max_abs_error: float


class OracleDocument(VersionedDocument):
    tolerance: float
    passed: bool
    cases: List[OracleCase]


class FusionDocument(VersionedDocument):
    alpha: float
    beta: float
    implicit_weight: float
    probs: List[float]


class SweepCell(BaseModel):
    alpha: float
    beta: float
    valid: bool
    score: Optional[float] = None
    error: Optional[str] = None


class SweepDocument(VersionedDocument):
    step: float
    scorer: str
    alphas: List[float]
    betas: List[float]
    cells: List[SweepCell]
    best: Optional[SweepCell] = None
