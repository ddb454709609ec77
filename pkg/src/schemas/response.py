"""
Shared base for every versioned JSON document
"""
from pydantic import BaseModel, Field


class VersionedDocument(BaseModel):
    format_version: int = Field(1, description="Schema version of the document")
