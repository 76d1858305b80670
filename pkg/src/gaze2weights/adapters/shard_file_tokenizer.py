"""Shard tokenizer that replays shard maps produced by an external tokenizer."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import structlog

from ..core.artifacts import ShardMap
from ..core.entities import TokenMap
from ..exceptions import ProjectionException
from ..ports.shard_tokenizer import ShardTokenizerPort
from ..utils.artifact_loader import load_artifact_payload

logger = structlog.get_logger()


class ShardFileTokenizer(ShardTokenizerPort):
    """Reads ``{token_id: [slots]}`` or ``{example_id: {token_id: [slots]}}`` from a JSON/YAML file."""

    def __init__(self, path: str | Path):
        payload = load_artifact_payload(path, artifact_name="shard map")
        if not isinstance(payload, dict):
            raise ProjectionException("Shard map file must contain an object", {"path": str(path)})
        self._path = Path(path)
        self._per_example = bool(payload) and all(isinstance(value, dict) for value in payload.values())
        self._payload: dict[str, Any] = payload

    @property
    def provider_type(self) -> str:
        return "file"

    def shard_map(self, token_map: TokenMap, example_id: int = 0) -> ShardMap:
        entry = self._payload
        if self._per_example:
            if str(example_id) not in self._payload:
                raise ProjectionException(
                    f"No shard map for example {example_id}", {"path": str(self._path), "example_id": example_id}
                )
            entry = self._payload[str(example_id)]
        shard_map = ShardMap.from_dict(entry)
        if len(shard_map.slots) != len(token_map):
            raise ProjectionException(
                "Shard map does not cover the token map",
                {"example_id": example_id, "shard_tokens": len(shard_map.slots), "tokens": len(token_map)},
            )
        return shard_map
