"""Bigram/trigram gaze-transition tables and the global n-gram index."""

from __future__ import annotations

from collections import Counter, defaultdict
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any, Union

import structlog

from ..core.artifacts import Gram, NGramIndex, TransitionTables
from ..core.entities import ScanPath, SessionMode, TokenMap
from ..exceptions import TransitionException
from ..utils.artifact_loader import load_artifact_payload
from ..utils.storage import write_canonical_json

logger = structlog.get_logger()

DEFAULT_PRUNE_THRESHOLD = 5

TokenMaps = Union[TokenMap, Sequence[TokenMap]]
ModeTables = dict[SessionMode, tuple[TransitionTables, NGramIndex]]


def _class_sequences(paths: Sequence[ScanPath], token_maps: TokenMaps) -> list[list[str]]:
    if isinstance(token_maps, TokenMap):
        return [path.class_sequence(token_maps) for path in paths]
    if len(token_maps) != len(paths):
        raise TransitionException(
            "One token map per scan path is required", {"paths": len(paths), "maps": len(token_maps)}
        )
    return [path.class_sequence(token_map) for path, token_map in zip(paths, token_maps)]


def ngrams(sequence: Sequence[str], order: int) -> list[Gram]:
    """Sliding windows of ``order`` consecutive labels."""
    return [tuple(sequence[i : i + order]) for i in range(len(sequence) - order + 1)]


def count_ngrams(paths: Sequence[ScanPath], token_maps: TokenMaps) -> tuple[Counter[Gram], Counter[Gram]]:
    """Bigram and trigram counts over consecutive fixated token classes."""
    c2: Counter[Gram] = Counter()
    c3: Counter[Gram] = Counter()
    for sequence in _class_sequences(paths, token_maps):
        c2.update(ngrams(sequence, 2))
        c3.update(ngrams(sequence, 3))
    return c2, c3


def prune(counts: Mapping[Gram, int], threshold: int = DEFAULT_PRUNE_THRESHOLD) -> Counter[Gram]:
    """Drop every n-gram seen fewer than ``threshold`` times."""
    if threshold < 1:
        raise TransitionException("Prune threshold must be >= 1", {"threshold": threshold})
    return Counter({gram: count for gram, count in counts.items() if count >= threshold})


def _normalize(counts: Mapping[Gram, int]) -> dict[Gram, float]:
    totals: dict[Gram, int] = defaultdict(int)
    for gram, count in counts.items():
        totals[gram[:-1]] += count
    return {gram: count / totals[gram[:-1]] for gram, count in counts.items() if totals[gram[:-1]] > 0}


def conditional_probs(
    c2: Mapping[Gram, int], c3: Mapping[Gram, int]
) -> tuple[dict[Gram, float], dict[Gram, float]]:
    """``P(b | a)`` and ``P(c | a, b)`` normalized over the surviving entries of each context."""
    return _normalize(c2), _normalize(c3)


def build_index(
    taxonomy: Sequence[str], p2: Mapping[Gram, float], p3: Mapping[Gram, float]
) -> NGramIndex:
    """Classes in taxonomy order, then bigrams, then trigrams, each sorted lexicographically."""
    index = NGramIndex((label,) for label in taxonomy)
    for gram in sorted(p2):
        index.add(gram)
    for gram in sorted(p3):
        index.add(gram)
    return index


def build_tables(
    paths: Sequence[ScanPath],
    token_maps: TokenMaps,
    threshold: int = DEFAULT_PRUNE_THRESHOLD,
) -> TransitionTables:
    """Count, prune, then normalize."""
    raw2, raw3 = count_ngrams(paths, token_maps)
    c2, c3 = prune(raw2, threshold), prune(raw3, threshold)
    p2, p3 = conditional_probs(c2, c3)
    logger.debug(
        "Built transition tables",
        bigrams=len(raw2),
        trigrams=len(raw3),
        pruned_bigrams=len(raw2) - len(c2),
        pruned_trigrams=len(raw3) - len(c3),
    )
    return TransitionTables(c2=dict(sorted(c2.items())), c3=dict(sorted(c3.items())), p2=p2, p3=p3)


def tables_to_dict(fitted: ModeTables) -> dict[str, Any]:
    payload = {}
    for mode, (tables, index) in fitted.items():
        entry = tables.to_dict()
        entry["index"] = index.to_list()
        payload[mode.value] = entry
    return payload


def tables_from_dict(payload: Mapping[str, Any]) -> ModeTables:
    fitted: ModeTables = {}
    for mode_name, entry in payload.items():
        try:
            mode = SessionMode(mode_name)
        except ValueError as exc:
            raise TransitionException(f"Unknown session mode '{mode_name}' in tables file") from exc
        if not isinstance(entry, Mapping) or "index" not in entry:
            raise TransitionException(f"Tables for mode '{mode_name}' lack an index")
        fitted[mode] = (TransitionTables.from_dict(entry), NGramIndex.from_list(entry["index"]))
    return fitted


class TransitionService:
    """Fits per-mode transition tables and their n-gram indices."""

    def __init__(self, taxonomy: Sequence[str], prune_threshold: int = DEFAULT_PRUNE_THRESHOLD):
        if prune_threshold < 1:
            raise TransitionException("Prune threshold must be >= 1", {"threshold": prune_threshold})
        self.taxonomy = tuple(taxonomy)
        self.prune_threshold = prune_threshold

    def count_ngrams(self, paths: Sequence[ScanPath], token_maps: TokenMaps) -> tuple[Counter[Gram], Counter[Gram]]:
        return count_ngrams(paths, token_maps)

    def prune(self, counts: Mapping[Gram, int]) -> Counter[Gram]:
        return prune(counts, self.prune_threshold)

    def conditional_probs(
        self, c2: Mapping[Gram, int], c3: Mapping[Gram, int]
    ) -> tuple[dict[Gram, float], dict[Gram, float]]:
        return conditional_probs(c2, c3)

    def build_index(self, tables: TransitionTables) -> NGramIndex:
        return build_index(self.taxonomy, tables.p2, tables.p3)

    def fit(self, paths: Sequence[ScanPath], token_maps: TokenMaps) -> tuple[TransitionTables, NGramIndex]:
        tables = build_tables(paths, token_maps, self.prune_threshold)
        return tables, self.build_index(tables)

    def fit_modes(self, paths: Sequence[ScanPath], token_maps: TokenMaps) -> ModeTables:
        """Reading and writing tables from their own sessions; combined from all of them."""
        if isinstance(token_maps, TokenMap):
            pairs = [(path, token_maps) for path in paths]
        else:
            if len(token_maps) != len(paths):
                raise TransitionException(
                    "One token map per scan path is required", {"paths": len(paths), "maps": len(token_maps)}
                )
            pairs = list(zip(paths, token_maps))
        fitted: ModeTables = {}
        for mode in SessionMode:
            group = pairs if mode == SessionMode.COMBINED else [pair for pair in pairs if pair[0].session_mode == mode]
            tables, index = self.fit([p for p, _ in group], [m for _, m in group])
            fitted[mode] = (tables, index)
            logger.info(
                "Fitted transition tables",
                mode=mode.value,
                paths=len(group),
                bigrams=len(tables.c2),
                trigrams=len(tables.c3),
                index_size=len(index),
            )
        return fitted

    def save(self, fitted: ModeTables, path: str | Path) -> int:
        return write_canonical_json(path, tables_to_dict(fitted))

    @staticmethod
    def load(path: str | Path) -> ModeTables:
        payload = load_artifact_payload(path, artifact_name="tables")
        if not isinstance(payload, Mapping):
            raise TransitionException("Tables file must contain an object keyed by session mode")
        return tables_from_dict(payload)
