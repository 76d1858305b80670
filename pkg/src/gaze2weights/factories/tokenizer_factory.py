"""Tokenizer Factory for creating shard tokenizer implementations.

Follows the Registry pattern so new subword tokenizers can be registered at
runtime without touching the weight projection service.
"""

from typing import Any, Dict, Type

from ..exceptions import ConfigurationException
from ..ports.shard_tokenizer import ShardTokenizerPort


class TokenizerFactory:
    """Factory for creating shard tokenizer instances.

    Example:
        tokenizer = TokenizerFactory.create("demo")
        tokenizer = TokenizerFactory.create("tiktoken", encoding_name="o200k_base")
        tokenizer = TokenizerFactory.create("file", path="shards.json")

        # Register a custom tokenizer
        TokenizerFactory.register("sentencepiece", SentencePieceTokenizer)
    """

    _registry: Dict[str, Type[ShardTokenizerPort]] = {}
    _defaults_registered: bool = False

    @classmethod
    def _register_default_tokenizers(cls) -> None:
        """Register built-in tokenizers.

        Uses lazy imports so the optional tiktoken dependency is only loaded
        when that tokenizer is requested.
        """
        if cls._defaults_registered:
            return

        from ..adapters.demo_tokenizer import DemoTokenizer
        from ..adapters.shard_file_tokenizer import ShardFileTokenizer
        from ..adapters.tiktoken_tokenizer import TiktokenTokenizer

        cls._registry.setdefault("demo", DemoTokenizer)
        cls._registry.setdefault("tiktoken", TiktokenTokenizer)
        cls._registry.setdefault("file", ShardFileTokenizer)

        cls._defaults_registered = True

    @classmethod
    def register(cls, name: str, tokenizer_class: Type[ShardTokenizerPort]) -> None:
        """Register a tokenizer class under ``name``."""
        cls._register_default_tokenizers()
        cls._registry[name.lower()] = tokenizer_class

    @classmethod
    def unregister(cls, name: str) -> bool:
        """Unregister a tokenizer; returns True if it was registered."""
        cls._register_default_tokenizers()
        if name.lower() in cls._registry:
            del cls._registry[name.lower()]
            return True
        return False

    @classmethod
    def get_registered_types(cls) -> list[str]:
        cls._register_default_tokenizers()
        return sorted(cls._registry)

    @classmethod
    def is_registered(cls, name: str) -> bool:
        cls._register_default_tokenizers()
        return name.lower() in cls._registry

    @classmethod
    def create(cls, name: str, **kwargs: Any) -> ShardTokenizerPort:
        """Create a tokenizer by registry name.

        Raises:
            ConfigurationException: If no tokenizer is registered under ``name``.
        """
        cls._register_default_tokenizers()
        tokenizer_class = cls._registry.get(name.lower())
        if tokenizer_class is None:
            supported = ", ".join(sorted(cls._registry))
            raise ConfigurationException(
                f"Unsupported tokenizer: {name}. Supported tokenizers: {supported}", {"tokenizer": name}
            )
        return tokenizer_class(**kwargs)
