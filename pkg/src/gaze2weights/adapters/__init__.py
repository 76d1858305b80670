"""Adapters (implementations) for gaze2weights."""

from .csv_gaze_reader import CsvGazeReader
from .demo_tokenizer import DemoTokenizer
from .java_subset_classifier import JavaSubsetClassifier
from .shard_file_tokenizer import ShardFileTokenizer

__all__ = [
    "CsvGazeReader",
    "DemoTokenizer",
    "JavaSubsetClassifier",
    "ShardFileTokenizer",
]
