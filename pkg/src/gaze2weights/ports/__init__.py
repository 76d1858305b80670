"""Ports (interfaces) for gaze2weights."""

from .gaze_reader import GazeReaderPort
from .shard_tokenizer import ShardTokenizerPort
from .source_classifier import SourceClassifierPort

__all__ = [
    "GazeReaderPort",
    "ShardTokenizerPort",
    "SourceClassifierPort",
]
