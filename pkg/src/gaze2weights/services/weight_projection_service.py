"""Per-token training weights from pseudo paths, projected onto subword shards."""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np
import structlog

from ..core.artifacts import (
    AblationConfig,
    Gram,
    PseudoExample,
    PseudoPath,
    SaliencePriorSet,
    ShardMap,
    WeightVector,
)
from ..core.entities import SessionMode, TokenMap
from ..exceptions import Gaze2WeightsException, ProjectionException
from ..ports.shard_tokenizer import ShardTokenizerPort
from ..utils.artifact_loader import load_artifact_payload
from ..utils.storage import read_jsonl, write_canonical_json, write_jsonl

logger = structlog.get_logger()

DEFAULT_W_BASE = 3.0


def token_weight(
    w_base: float,
    freq: int,
    posterior_mean: float,
    use_rarity: bool = True,
    use_salience: bool = True,
) -> float:
    """``w_base + 1 / ln(freq + 2) + E[theta]``; the two bonuses can be switched off."""
    if freq < 0:
        raise ProjectionException("Gram frequency must be nonnegative", {"freq": freq})
    weight = w_base
    if use_rarity:
        weight += 1.0 / math.log(freq + 2)
    if use_salience:
        weight += posterior_mean
    return weight


def gram_frequencies(paths: Iterable[PseudoPath]) -> Counter[Gram]:
    """How often each n-gram was emitted across every pseudo path of the run."""
    freqs: Counter[Gram] = Counter()
    for path in paths:
        freqs.update(gram.gram for gram in path.grams)
    return freqs


def assemble_ast_weights(
    path: PseudoPath,
    freqs: Mapping[Gram, int],
    priors: SaliencePriorSet,
    token_map: TokenMap | None = None,
    w_base: float = DEFAULT_W_BASE,
    mode: SessionMode = SessionMode.COMBINED,
    ablation: AblationConfig | None = None,
    token_count: int | None = None,
) -> np.ndarray:
    """Weight of every AST token; tokens outside the mask keep ``w_base``.

    The class of a covered token is read from its gram. When ``token_map`` is
    given it fixes the token count and must agree with those classes.
    """
    ablation = ablation or AblationConfig()
    if token_map is not None:
        count = len(token_map)
    elif token_count is not None:
        count = token_count
    else:
        raise ProjectionException("Either a token map or a token count is required")

    weights = np.full(count, float(w_base), dtype=np.float64)
    covered: set[int] = set()
    for pseudo_gram in path.grams:
        if pseudo_gram.gram not in freqs:
            raise ProjectionException(
                "Gram is absent from the frequency table", {"gram": list(pseudo_gram.gram)}
            )
        freq = int(freqs[pseudo_gram.gram])
        for label, token_id in zip(pseudo_gram.gram, pseudo_gram.token_ids):
            if not 0 <= token_id < count:
                raise ProjectionException("Gram covers a token outside the example", {"token_id": token_id})
            if token_id in covered:
                raise ProjectionException("Token is covered by more than one gram", {"token_id": token_id})
            if token_map is not None and token_map.class_of(token_id) != label:
                raise ProjectionException(
                    "Gram class disagrees with the token map",
                    {"token_id": token_id, "gram_class": label, "map_class": token_map.class_of(token_id)},
                )
            covered.add(token_id)
            if pseudo_gram.arity == 1 and not ablation.use_monograms:
                continue
            weights[token_id] = token_weight(
                w_base,
                freq,
                priors.mean(label, mode),
                use_rarity=ablation.use_rarity,
                use_salience=ablation.use_salience,
            )
    return weights


def project_shards(ast_weights: Sequence[float] | np.ndarray, shard_map: ShardMap) -> WeightVector:
    """Every shard inherits its token's weight; shards follow token order."""
    values = np.asarray(ast_weights, dtype=np.float64)
    counts = shard_map.shard_counts()
    if len(counts) != values.shape[0]:
        raise ProjectionException(
            "Shard map is inconsistent with the token count", {"shard_tokens": len(counts), "tokens": values.shape[0]}
        )
    if any(count == 0 for count in counts):
        raise ProjectionException("Every token must tokenize to at least one shard")
    return WeightVector(weights=np.repeat(values, counts), offset=shard_map.offset)


def shard_maps_to_dict(shard_maps: Mapping[int, ShardMap]) -> dict[str, Any]:
    return {str(example_id): shard_map.to_dict() for example_id, shard_map in shard_maps.items()}


def shard_maps_from_dict(payload: Any) -> dict[int, ShardMap]:
    if not isinstance(payload, Mapping):
        raise ProjectionException("Shards file must contain an object keyed by example id")
    try:
        return {int(example_id): ShardMap.from_dict(entry) for example_id, entry in payload.items()}
    except (TypeError, ValueError, AttributeError) as exc:
        raise ProjectionException(f"Malformed shards file: {exc}") from exc


class WeightProjectionService:
    """Turns pseudo paths into shard-level weight vectors."""

    def __init__(
        self,
        tokenizer: ShardTokenizerPort | None = None,
        w_base: float = DEFAULT_W_BASE,
        ablation: AblationConfig | None = None,
    ):
        if tokenizer is None:
            from ..adapters.demo_tokenizer import DemoTokenizer

            tokenizer = DemoTokenizer()
        if w_base < 0:
            raise ProjectionException("w_base must be nonnegative", {"w_base": w_base})
        self.tokenizer = tokenizer
        self.w_base = w_base
        self.ablation = ablation or AblationConfig()

    def token_weight(self, freq: int, posterior_mean: float) -> float:
        return token_weight(
            self.w_base, freq, posterior_mean, self.ablation.use_rarity, self.ablation.use_salience
        )

    def gram_frequencies(self, examples: Iterable[PseudoExample]) -> Counter[Gram]:
        return gram_frequencies(example.path for example in examples)

    def shard_map(self, token_map: TokenMap, example_id: int = 0) -> ShardMap:
        return self.tokenizer.shard_map(token_map, example_id)

    def assemble_ast_weights(
        self,
        example: PseudoExample,
        freqs: Mapping[Gram, int],
        priors: SaliencePriorSet,
        mode: SessionMode,
        token_map: TokenMap | None = None,
    ) -> np.ndarray:
        return assemble_ast_weights(
            example.path,
            freqs,
            priors,
            token_map=token_map,
            w_base=self.w_base,
            mode=mode,
            ablation=self.ablation,
            token_count=example.token_count,
        )

    def project_shards(self, ast_weights: Sequence[float] | np.ndarray, shard_map: ShardMap) -> WeightVector:
        return project_shards(ast_weights, shard_map)

    def project_examples(
        self,
        examples: Sequence[PseudoExample],
        priors: SaliencePriorSet,
        shard_maps: Mapping[int, ShardMap],
        mode: SessionMode,
        token_maps: Mapping[int, TokenMap] | None = None,
    ) -> dict[int, WeightVector]:
        """Weight vectors for every example, with gram frequencies pooled over all of them."""
        freqs = self.gram_frequencies(examples)
        vectors: dict[int, WeightVector] = {}
        for example in sorted(examples, key=lambda item: item.example_id):
            if example.example_id not in shard_maps:
                raise ProjectionException(
                    f"No shard map for example {example.example_id}", {"example_id": example.example_id}
                )
            token_map = token_maps.get(example.example_id) if token_maps else None
            try:
                ast_weights = self.assemble_ast_weights(example, freqs, priors, mode, token_map)
                vectors[example.example_id] = self.project_shards(ast_weights, shard_maps[example.example_id])
            except Gaze2WeightsException as exc:
                exc.details.setdefault("example_id", example.example_id)
                raise
        logger.info(
            "Projected weights",
            examples=len(vectors),
            slots=sum(len(vector) for vector in vectors.values()),
            distinct_grams=len(freqs),
        )
        return vectors

    def save_weights(self, vectors: Mapping[int, WeightVector], path: str | Path) -> int:
        records = [
            {"example_id": example_id, "offset": vectors[example_id].offset, "weights": vectors[example_id].to_list()}
            for example_id in sorted(vectors)
        ]
        return write_jsonl(path, records)

    @staticmethod
    def load_weights(path: str | Path) -> dict[int, WeightVector]:
        vectors: dict[int, WeightVector] = {}
        for record in read_jsonl(path):
            try:
                vectors[int(record["example_id"])] = WeightVector(
                    weights=np.asarray(record["weights"], dtype=np.float64), offset=int(record.get("offset", 0))
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ProjectionException(f"Malformed weight record in {path}: {exc}") from exc
        return vectors

    def save_shards(self, shard_maps: Mapping[int, ShardMap], path: str | Path) -> int:
        return write_canonical_json(path, shard_maps_to_dict(shard_maps))

    @staticmethod
    def load_shards(path: str | Path) -> dict[int, ShardMap]:
        return shard_maps_from_dict(load_artifact_payload(path, artifact_name="shards"))
