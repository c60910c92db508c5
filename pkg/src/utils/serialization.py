"""
JSON helpers and content hashes
"""

import hashlib
from pathlib import Path
from typing import Any

import orjson
from pydantic import BaseModel, ValidationError

_DUMP_OPTIONS = orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY


def dumps(obj: Any, pretty: bool = False) -> bytes:
    """Canonical JSON bytes (sorted keys, full double precision)"""
    if isinstance(obj, BaseModel):
        obj = obj.model_dump(mode="json")
    options = _DUMP_OPTIONS | (orjson.OPT_INDENT_2 if pretty else 0)
    return orjson.dumps(obj, option=options, default=_default)


def loads(data: bytes | str) -> Any:
    return orjson.loads(data)


def content_hash(obj: Any) -> str:
    """sha256 hex digest of the canonical JSON form of ``obj``"""
    return hashlib.sha256(dumps(obj)).hexdigest()


def write_json(path: Path, obj: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps(obj, pretty=True) + b"\n")


def read_json(path: Path) -> Any:
    return orjson.loads(path.read_bytes())


def _default(obj: Any) -> Any:
    if isinstance(obj, BaseModel):
        return obj.model_dump(mode="json")
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"Type {type(obj).__name__} is not JSON serializable")


def validation_messages(error: ValidationError) -> list[str]:
    """Flatten a pydantic ValidationError into ``loc: message`` strings"""
    return [
        f"{'.'.join(str(part) for part in err['loc']) or '<root>'}: {err['msg']}"
        for err in error.errors()
    ]
