"""
Configuration management for the relationship encoder
"""
from typing import Optional, List
from pydantic import field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Project
    PROJECT_NAME: str = "relgat"
    FORMAT_VERSION: int = 1
    SEED: int = 0

    # Region features
    FEATURE_DIM: int = 1024

    # Geometry
    GEOMETRY_EMBED_DIM: int = 64
    GEOMETRY_EPSILON: float = 1e-3
    EMBED_WAVELENGTH_BASE: float = 1000.0

    # Relationship extraction
    OVERLAP_IOU_THRESHOLD: float = 0.5
    DISTANCE_RATIO: float = 0.5
    SEMANTIC_THRESHOLD: float = 0.5
    SEMANTIC_CLASSES: int = 16

    # Semantic classifier
    CLASSIFIER_DIM: int = 256
    CLASSIFIER_HEADS: int = 4
    CLASSIFIER_FF_MULTIPLIER: int = 4
    LAYER_NORM_EPSILON: float = 1e-5

    # Typed GAT
    TYPED_DIRECTION_MODE: str = "incoming"  # "incoming" or "bidirectional"
    TYPED_AGGREGATION: str = "attention"  # "attention" or "uniform"

    # Fusion
    FUSION_ALPHA: float = 0.3
    FUSION_BETA: float = 0.3
    SWEEP_STEP: float = 0.1
    SWEEP_WORKERS: int = 4

    # Gradient checks
    GRADCHECK_STEP: float = 1e-5
    GRADCHECK_TOLERANCE: float = 1e-4
    GRADCHECK_KINK_MARGIN: float = 1e-4

    # Attention export
    TOP_K: int = 3

    # Logging Configuration
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    LOG_FILE: Optional[str] = None

    GRAPH_KINDS: List[str] = ["imp", "spa", "sem"]

    @field_validator("GEOMETRY_EMBED_DIM")
    @classmethod
    def validate_embed_dim(cls, v):
        if v <= 0 or v % 8 != 0:
            raise ValueError("GEOMETRY_EMBED_DIM must be a positive multiple of 8")
        return v

    @field_validator("TYPED_DIRECTION_MODE")
    @classmethod
    def validate_direction_mode(cls, v):
        if v not in ("incoming", "bidirectional"):
            raise ValueError("TYPED_DIRECTION_MODE must be 'incoming' or 'bidirectional'")
        return v

    @field_validator("TYPED_AGGREGATION")
    @classmethod
    def validate_aggregation(cls, v):
        if v not in ("attention", "uniform"):
            raise ValueError("TYPED_AGGREGATION must be 'attention' or 'uniform'")
        return v

    @field_validator("SWEEP_STEP")
    @classmethod
    def validate_sweep_step(cls, v):
        if not 0.0 < v < 1.0:
            raise ValueError("SWEEP_STEP must lie in (0, 1)")
        return v

    @model_validator(mode="after")
    def validate_cross_fields(self):
        if self.CLASSIFIER_DIM % self.CLASSIFIER_HEADS != 0:
            raise ValueError("CLASSIFIER_DIM must be divisible by CLASSIFIER_HEADS")
        if self.FUSION_ALPHA < 0 or self.FUSION_BETA < 0 or self.FUSION_ALPHA + self.FUSION_BETA >= 1:
            raise ValueError("FUSION_ALPHA/FUSION_BETA must be >= 0 with a sum below 1")
        return self

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="RELGAT_",
        case_sensitive=True,
        extra="ignore",
    )


settings = Settings()
