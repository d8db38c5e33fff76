"""
canonical_json.py — Byte-stable JSON for reports, checkpoints and summaries.

Keys are sorted, indentation is fixed, and every float is written with 17
significant digits so a double survives a write → read → write cycle unchanged.
Non-finite floats become the strings "inf", "-inf" and "nan".
"""

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from shared_utils.errors import SchemaError, UnknownSchemaVersion

SCHEMA_VERSION = 1
_INDENT = "  "


def _format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    txt = format(x, ".17g")
    if not any(c in txt for c in ".en"):
        txt += ".0"
    return txt


def _plain(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, tuple):
        return list(obj)
    return obj


def _emit(obj: Any, depth: int, out: list[str]) -> None:
    obj = _plain(obj)
    pad = _INDENT * depth
    inner = _INDENT * (depth + 1)
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_format_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        for i, (k, v) in enumerate(items):
            out.append(inner + json.dumps(str(k), ensure_ascii=False) + ": ")
            _emit(v, depth + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        # numeric rows stay on one line so weight matrices remain readable
        if all(isinstance(_plain(v), (int, float)) and not isinstance(v, bool) for v in obj):
            parts: list[str] = []
            for v in obj:
                _emit(v, 0, parts)
            out.append("[" + ", ".join(parts) + "]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(inner)
            _emit(v, depth + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "]")
    else:
        raise TypeError(f"Cannot serialise {type(obj).__name__}")


def dumps(obj: Any) -> str:
    out: list[str] = []
    _emit(obj, 0, out)
    return "".join(out) + "\n"


def write(path: str | Path, obj: Any) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def loads(text: str, source: str = "<string>") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON in {source} ({e.msg}, column {e.colno})", line=e.lineno) from e


def read_versioned(path: str | Path, kind: str) -> dict:
    """Load a document written by this package and check its kind and schema version."""
    doc = loads(Path(path).read_text(encoding="utf-8"), source=str(path))
    if not isinstance(doc, dict):
        raise SchemaError(f"{path} is not a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise UnknownSchemaVersion(f"unsupported schema_version {version!r} in {path}", field="schema_version")
    if doc.get("kind") != kind:
        raise SchemaError(f"expected a {kind!r} document, got {doc.get('kind')!r}", field="kind")
    return doc
