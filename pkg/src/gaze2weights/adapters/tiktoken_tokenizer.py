"""Shard tokenizer backed by tiktoken BPE encodings."""

import structlog

from ..core.artifacts import ShardMap
from ..core.entities import TokenMap
from ..exceptions import ConfigurationException
from ..ports.shard_tokenizer import ShardTokenizerPort

logger = structlog.get_logger()


class TiktokenTokenizer(ShardTokenizerPort):
    """Counts BPE ids per AST token text using a tiktoken encoding.

    Each token is encoded on its own, so shard counts do not depend on
    neighbouring whitespace.
    """

    def __init__(self, encoding_name: str = "cl100k_base", offset: int = 0):
        try:
            import tiktoken
        except ImportError as e:
            raise ConfigurationException(
                "tiktoken is not installed. Install it or use the 'demo' tokenizer."
            ) from e

        self._encoding_name = encoding_name
        self._encoding = tiktoken.get_encoding(encoding_name)
        self._offset = offset
        logger.debug("Loaded tiktoken encoding", encoding=encoding_name)

    @property
    def provider_type(self) -> str:
        return "tiktoken"

    def shard_map(self, token_map: TokenMap, example_id: int = 0) -> ShardMap:
        counts = [len(self._encoding.encode(token.text)) for token in token_map.tokens]
        return ShardMap.from_counts(counts, self._offset)
