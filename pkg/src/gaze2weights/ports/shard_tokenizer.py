"""Shard Tokenizer Port - Interface for mapping AST tokens onto subword slots."""

from abc import ABC, abstractmethod

from ..core.artifacts import ShardMap
from ..core.entities import TokenMap


class ShardTokenizerPort(ABC):
    """Abstract interface for subword tokenizers that feed weight projection."""

    @abstractmethod
    def shard_map(self, token_map: TokenMap, example_id: int = 0) -> ShardMap:
        """Assign contiguous subword slots to every token of ``token_map``.

        Args:
            token_map: Classified tokens of one training example.
            example_id: Identifier of the example, for tokenizers backed by precomputed maps.

        Returns:
            ShardMap with at least one slot per token.

        Raises:
            ProjectionException: If a token produces no shards.
        """
        pass

    @property
    @abstractmethod
    def provider_type(self) -> str:
        """Registry name of the tokenizer (e.g. "demo", "tiktoken", "file")."""
        pass
