"""
File handling utilities for JSON documents
"""
import json
import logging
from pathlib import Path
from typing import Optional, Type, TypeVar, Union

from pydantic import BaseModel, ValidationError

from src.core.exceptions import InputError

logger = logging.getLogger(__name__)

DocumentT = TypeVar("DocumentT", bound=BaseModel)


def load_json(path: Union[str, Path]):
    """Parse a JSON file, reporting syntax errors with line and column"""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read file: {e.strerror}", source=str(path))
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"invalid JSON: {e.msg}", source=str(path), line=e.lineno, column=e.colno)


def read_document(path: Union[str, Path], model: Type[DocumentT]) -> DocumentT:
    payload = load_json(path)
    try:
        return model.model_validate(payload)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or "<root>"
        raise InputError(f"{field}: {first['msg']} ({e.error_count()} error(s))", source=str(path))


def dump_document(document: BaseModel, indent: Optional[int] = 2) -> str:
    """Deterministic JSON text: fields in declaration order, nulls dropped"""
    payload = document.model_dump(mode="json", exclude_none=True)
    return json.dumps(payload, indent=indent) + "\n"


def write_document(document: BaseModel, path: Union[str, Path], indent: Optional[int] = 2) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_document(document, indent=indent), encoding="utf-8")
