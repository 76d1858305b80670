"""Demonstration subword tokenizer: camelCase, digit and punctuation splits."""

from __future__ import annotations

import re

from ..core.artifacts import ShardMap
from ..core.entities import TokenMap
from ..ports.shard_tokenizer import ShardTokenizerPort

_SHARD_PATTERN = re.compile(r"[A-Z]+(?![a-z])|[A-Z]?[a-z]+|\d+|_|[^\w\s]|\w")


def split_shards(text: str) -> list[str]:
    """Split one source token into shards; a token always yields at least one shard."""
    shards = _SHARD_PATTERN.findall(text)
    return shards or [text]


class DemoTokenizer(ShardTokenizerPort):
    """Splits identifiers on camelCase, digit/letter and underscore boundaries.

    Every punctuation character becomes its own shard, so ``getValue()`` is
    tokenized as ``get``, ``Value``, ``(``, ``)`` when lexed as one token.
    """

    def __init__(self, offset: int = 0):
        self._offset = offset

    @property
    def provider_type(self) -> str:
        return "demo"

    def shard_map(self, token_map: TokenMap, example_id: int = 0) -> ShardMap:
        return ShardMap.from_counts((len(split_shards(token.text)) for token in token_map.tokens), self._offset)
