"""Helpers for loading gaze artifacts and configuration files from JSON/YAML/TOML."""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Any

import yaml

from ..core.entities import AstToken, BoundingBox, ScanPath, SessionGeometry, TokenMap
from ..core.taxonomy import DEFAULT_TAXONOMY
from ..exceptions import ArtifactException, GazeDataException, TokenMapException

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def load_artifact_payload(file_path: str | Path, *, artifact_name: str) -> Any:
    """Load an artifact payload, choosing the parser from the file suffix."""
    path = Path(file_path)
    if not path.exists():
        raise ArtifactException(f"{artifact_name.capitalize()} file not found: {path}", {"path": str(path)})
    content = path.read_text(encoding="utf-8")
    suffix = path.suffix.lower()
    try:
        if suffix == ".json":
            return json.loads(content)
        if suffix in {".yaml", ".yml"}:
            return yaml.safe_load(content)
        if suffix == ".toml":
            return tomllib.loads(content)

        stripped = content.lstrip()
        if stripped.startswith("{") or stripped.startswith("["):
            return json.loads(content)
        return yaml.safe_load(content)
    except json.JSONDecodeError as exc:
        raise ArtifactException(
            f"Invalid JSON in {artifact_name} file {path}: {exc.msg} (line {exc.lineno})", {"path": str(path)}
        ) from exc
    except yaml.YAMLError as exc:
        raise ArtifactException(f"Invalid YAML in {artifact_name} file {path}: {exc}", {"path": str(path)}) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ArtifactException(f"Invalid TOML in {artifact_name} file {path}: {exc}", {"path": str(path)}) from exc


def load_config_file(file_path: str | Path) -> dict[str, Any]:
    """Load flat configuration keys; a single ``[gaze2weights]`` table is unwrapped."""
    payload = load_artifact_payload(file_path, artifact_name="configuration")
    if payload is None:
        return {}
    if not isinstance(payload, dict):
        raise ArtifactException("Configuration file must contain an object of flat keys.")
    if set(payload) == {"gaze2weights"} and isinstance(payload["gaze2weights"], dict):
        payload = payload["gaze2weights"]
    return {key.replace("-", "_"): value for key, value in payload.items()}


def token_map_from_dict(payload: Any, taxonomy: tuple[str, ...] | None = None) -> TokenMap:
    """Map a dictionary into a TokenMap; the file taxonomy wins over ``taxonomy``."""
    if not isinstance(payload, dict):
        raise TokenMapException("Token map artifact must be a JSON/YAML object.")
    labels = payload.get("taxonomy")
    if labels is None:
        labels = list(taxonomy or DEFAULT_TAXONOMY)
    labels = _expect_string_list(labels, "taxonomy", TokenMapException)
    tokens = []
    for entry in _expect_list(payload.get("tokens"), "tokens", TokenMapException):
        missing = [key for key in ("id", "text", "class", "line", "bbox") if key not in entry]
        if missing:
            raise TokenMapException("Token entry is missing fields", {"missing": missing, "entry": entry})
        bbox = entry["bbox"]
        if not isinstance(bbox, list) or len(bbox) != 4:
            raise TokenMapException("'bbox' must be [x0, y0, x1, y1]", {"token_id": entry["id"]})
        tokens.append(
            AstToken(
                id=int(entry["id"]),
                text=str(entry["text"]),
                semantic_class=str(entry["class"]),
                line=int(entry["line"]),
                bbox=BoundingBox(*(float(value) for value in bbox)),
            )
        )
    tokens.sort(key=lambda token: token.id)
    return TokenMap(tokens=tuple(tokens), taxonomy=tuple(labels))


def geometry_from_dict(payload: Any) -> SessionGeometry:
    if not isinstance(payload, dict):
        raise GazeDataException("Session geometry must be an object.")
    try:
        return SessionGeometry(
            sample_rate=float(payload["sample_rate"]),
            pixels_per_degree=float(payload["pixels_per_degree"]),
            screen_w=int(payload["screen_w"]),
            screen_h=int(payload["screen_h"]),
        )
    except KeyError as exc:
        raise GazeDataException(f"Session geometry is missing '{exc.args[0]}'") from exc


def load_geometry(file_path: str | Path) -> SessionGeometry:
    return geometry_from_dict(load_artifact_payload(file_path, artifact_name="geometry"))


def scan_paths_from_payload(payload: Any) -> list[ScanPath]:
    """Accept a single path object, a list of paths, or ``{"paths": [...]}``."""
    if isinstance(payload, dict) and "paths" in payload:
        payload = payload["paths"]
    if isinstance(payload, dict):
        payload = [payload]
    try:
        return [ScanPath.from_dict(item) for item in _expect_list(payload, "paths", ArtifactException)]
    except (KeyError, TypeError, ValueError) as exc:
        raise ArtifactException(f"Malformed scan path entry: {exc}") from exc


def load_scan_paths(location: str | Path) -> list[ScanPath]:
    """Load scan paths from one file or from every ``*.json`` file of a directory (sorted by name)."""
    path = Path(location)
    if path.is_dir():
        paths: list[ScanPath] = []
        for child in sorted(path.glob("*.json")):
            paths.extend(scan_paths_from_payload(load_artifact_payload(child, artifact_name="scan path")))
        return paths
    return scan_paths_from_payload(load_artifact_payload(path, artifact_name="scan path"))


def _expect_list(value: Any, field_name: str, error: type[Exception] = ArtifactException) -> list[dict[str, Any]]:
    if value is None:
        return []
    if not isinstance(value, list):
        raise error(f"'{field_name}' must be a list.")
    for item in value:
        if not isinstance(item, dict):
            raise error(f"'{field_name}' entries must be objects.")
    return value


def _expect_string_list(value: Any, field_name: str, error: type[Exception] = ArtifactException) -> list[str]:
    if value is None:
        return []
    if not isinstance(value, list) or not all(isinstance(item, str) for item in value):
        raise error(f"'{field_name}' must be a list of strings.")
    return value
