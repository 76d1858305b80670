"""Factory classes for gaze2weights."""

from .tokenizer_factory import TokenizerFactory

__all__ = ["TokenizerFactory"]
