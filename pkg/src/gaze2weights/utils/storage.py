"""Canonical artifact writing: sorted keys, fixed float formatting, content digests.

Every artifact of a run goes through :func:`canonical_dumps` so that identical
inputs, configuration and seed produce byte-identical files.
"""

import hashlib
import json
import math
import os
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import structlog

from ..exceptions import ArtifactException

logger = structlog.get_logger()

DEFAULT_FLOAT_DIGITS = 17

PathLike = Union[str, Path]


def format_float(value: float, digits: int = DEFAULT_FLOAT_DIGITS) -> str:
    if not math.isfinite(value):
        raise ArtifactException("Artifacts cannot contain non-finite numbers", {"value": repr(value)})
    text = format(value, f".{digits}g")
    if not any(marker in text for marker in (".", "e", "E")):
        text += ".0"
    return text


def canonical_dumps(payload: Any, digits: int = DEFAULT_FLOAT_DIGITS, indent: Optional[int] = None) -> str:
    """Serialise ``payload`` as JSON with sorted keys and ``digits`` significant digits per float."""
    return _encode(payload, digits, indent, 0)


def _encode(value: Any, digits: int, indent: Optional[int], depth: int) -> str:
    if value is None or isinstance(value, (bool, np.bool_)):
        return json.dumps(None if value is None else bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(float(value), digits)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, Path):
        return json.dumps(value.as_posix(), ensure_ascii=False)
    if isinstance(value, np.ndarray):
        return _encode(value.tolist(), digits, indent, depth)

    newline, pad, inner_pad = "", "", ""
    if indent is not None:
        newline = "\n"
        pad = " " * (indent * depth)
        inner_pad = " " * (indent * (depth + 1))
    separator = "," + newline if indent is not None else ","

    if isinstance(value, Mapping):
        if not value:
            return "{}"
        items = []
        for key in sorted(value, key=str):
            encoded = _encode(value[key], digits, indent, depth + 1)
            colon = ": " if indent is not None else ":"
            items.append(f"{inner_pad}{json.dumps(str(key), ensure_ascii=False)}{colon}{encoded}")
        return "{" + newline + separator.join(items) + newline + pad + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [f"{inner_pad}{_encode(item, digits, indent, depth + 1)}" for item in value]
        return "[" + newline + separator.join(items) + newline + pad + "]"
    raise ArtifactException(f"Cannot serialise value of type {type(value).__name__}")


def write_canonical_json(path: PathLike, payload: Any, digits: int = DEFAULT_FLOAT_DIGITS) -> int:
    """Write one canonical JSON document; returns the number of bytes written."""
    data = (canonical_dumps(payload, digits) + "\n").encode("utf-8")
    return _write_bytes(Path(path), data)


def write_jsonl(path: PathLike, records: Iterable[Any], digits: int = DEFAULT_FLOAT_DIGITS) -> int:
    """Write one canonical JSON record per line."""
    data = "".join(canonical_dumps(record, digits) + "\n" for record in records).encode("utf-8")
    return _write_bytes(Path(path), data)


def read_jsonl(path: PathLike) -> list[Any]:
    records = []
    with Path(path).open(encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ArtifactException(
                    f"Invalid JSON on line {line_number} of {path}: {exc.msg}", {"line": line_number}
                ) from exc
    return records


def file_digest(path: PathLike) -> dict[str, Any]:
    data = Path(path).read_bytes()
    return {"bytes": len(data), "sha256": hashlib.sha256(data).hexdigest()}


def _write_bytes(path: Path, data: bytes) -> int:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    logger.debug("Wrote artifact", path=str(path), bytes=len(data))
    return len(data)


def get_output_directory(
    explicit: Optional[PathLike],
    env_var: str = "GAZE2W_OUTPUT_DIR",
    default: str = "gaze_bundle",
) -> Path:
    """Resolve the artifact directory: explicit value, then *env_var*, then ``./default``."""
    if explicit:
        return Path(explicit)
    from_env = os.getenv(env_var)
    if from_env:
        return Path(from_env)
    return Path(f"./{default}")
