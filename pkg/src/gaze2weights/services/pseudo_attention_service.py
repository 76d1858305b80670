"""Pseudo-attention masks sampled from salience priors and their line-aware pseudo scan paths."""

from __future__ import annotations

import math
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
import structlog
from scipy.stats import beta as beta_distribution

from ..core.artifacts import (
    AblationConfig,
    AttentionMask,
    BetaPrior,
    MaskConfig,
    MonogramCounts,
    NGramIndex,
    PseudoExample,
    PseudoGram,
    PseudoPath,
    SaliencePriorSet,
    TransitionTables,
)
from ..core.entities import SessionMode, TokenMap
from ..exceptions import SamplingException
from ..utils.artifact_loader import load_artifact_payload
from ..utils.helpers import derived_rng
from ..utils.storage import write_canonical_json

logger = structlog.get_logger()

DEFAULT_LINE_SPANS = {SessionMode.READING: 3, SessionMode.WRITING: 5, SessionMode.COMBINED: 4}


def sample_ratio(prior: BetaPrior, rng: np.random.Generator) -> float:
    """Inverse-transform draw ``rho = F^-1(u)`` from the pooled prior."""
    return float(beta_distribution.ppf(rng.random(), prior.alpha, prior.beta))


def sample_ratios(prior: BetaPrior, rng: np.random.Generator, size: int) -> np.ndarray:
    return np.asarray(beta_distribution.ppf(rng.random(size), prior.alpha, prior.beta), dtype=np.float64)


def class_quotas(
    token_map: TokenMap, m: int, monograms: MonogramCounts
) -> tuple[dict[str, int], dict[str, float]]:
    """Quotas ``m_s = max(1, floor(p_s * m))`` for every class present in the example."""
    shares = monograms.shares(token_map.taxonomy)
    present = [label for label, count in token_map.class_counts().items() if count]
    quotas = {label: (max(1, math.floor(shares[label] * m)) if m > 0 else 0) for label in present}
    return quotas, shares


def sample_mask(
    token_map: TokenMap,
    rho: float,
    monograms: MonogramCounts,
    rng: np.random.Generator,
) -> AttentionMask:
    """Select ``m = floor(rho * n)`` tokens, meeting class quotas in descending share order.

    Quotas are truncated once ``m`` selections are reached; slots left after
    the quotas are filled from the remaining positions regardless of class.
    """
    n = len(token_map)
    if n < 1:
        raise SamplingException("Cannot sample a mask over an empty token map")
    if not 0.0 <= rho <= 1.0:
        raise SamplingException("Salience ratio must lie in [0, 1]", {"rho": rho})

    m = math.floor(rho * n)
    quotas, shares = class_quotas(token_map, m, monograms)
    order = {label: rank for rank, label in enumerate(token_map.taxonomy)}
    positions = token_map.positions_by_class()

    selected: list[int] = []
    selected_per_class = dict.fromkeys(quotas, 0)
    leftover: list[int] = []
    for label in sorted(quotas, key=lambda label: (-shares[label], order[label])):
        shuffled = [int(position) for position in rng.permutation(positions[label])]
        take = min(quotas[label], len(shuffled), m - len(selected))
        selected.extend(shuffled[:take])
        selected_per_class[label] = take
        leftover.extend(shuffled[take:])

    residual = m - len(selected)
    if residual > 0:
        pool = [int(position) for position in rng.permutation(sorted(leftover))]
        selected.extend(pool[:residual])
        for position in pool[:residual]:
            selected_per_class[token_map.class_of(position)] += 1

    bits = [0] * n
    for position in selected:
        bits[position] = 1
    feasible = sum(min(quota, len(positions[label])) for label, quota in quotas.items()) <= m
    return AttentionMask(
        bits=tuple(bits),
        rho=rho,
        m=m,
        quotas=quotas,
        selected_per_class=selected_per_class,
        feasible=feasible,
    )


def generate_path(
    mask: AttentionMask,
    token_map: TokenMap,
    tables: TransitionTables,
    index: NGramIndex,
    cfg: MaskConfig,
    use_higher_order: bool = True,
) -> PseudoPath:
    """Greedy left-to-right trigram, then bigram, then monogram emission over the masked tokens.

    A trigram or bigram is emitted only if it survived pruning and its tokens
    span at most ``cfg.line_span`` lines.
    """
    if len(mask.bits) != len(token_map):
        raise SamplingException(
            "Mask length must equal the token count", {"mask": len(mask.bits), "tokens": len(token_map)}
        )
    masked = mask.masked_positions()
    for token_id in masked:
        label = token_map.class_of(token_id)
        if (label,) not in index:
            raise SamplingException(
                f"Masked token class '{label}' is not in the n-gram index", {"token_id": token_id, "class": label}
            )

    def line(token_id: int) -> int:
        return token_map.tokens[token_id].line

    grams: list[PseudoGram] = []
    i = 0
    while i < len(masked):
        window: tuple[int, ...] = (masked[i],)
        if use_higher_order and i + 2 < len(masked):
            triple = (masked[i], masked[i + 1], masked[i + 2])
            gram = tuple(token_map.class_of(token_id) for token_id in triple)
            if line(triple[2]) - line(triple[0]) <= cfg.line_span and tables.has_trigram(gram):
                window = triple
        if len(window) == 1 and use_higher_order and i + 1 < len(masked):
            pair = (masked[i], masked[i + 1])
            gram = tuple(token_map.class_of(token_id) for token_id in pair)
            if line(pair[1]) - line(pair[0]) <= cfg.line_span and tables.has_bigram(gram):
                window = pair
        gram = tuple(token_map.class_of(token_id) for token_id in window)
        grams.append(PseudoGram(gram=gram, index=index.index_of(gram), token_ids=window))
        i += len(window)
    return PseudoPath(tuple(grams))


def pseudo_to_dict(mode: SessionMode, seed: int, examples: Sequence[PseudoExample]) -> dict[str, Any]:
    return {"mode": mode.value, "seed": seed, "examples": [example.to_dict() for example in examples]}


def pseudo_from_dict(payload: Any) -> tuple[SessionMode, int, list[PseudoExample]]:
    if not isinstance(payload, dict) or "examples" not in payload:
        raise SamplingException("Pseudo file must be an object with 'examples'")
    try:
        mode = SessionMode(payload.get("mode", SessionMode.COMBINED.value))
        examples = [PseudoExample.from_dict(item) for item in payload["examples"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise SamplingException(f"Malformed pseudo file: {exc}") from exc
    return mode, int(payload.get("seed", 0)), examples


class PseudoAttentionService:
    """Samples masks and pseudo paths for training examples."""

    def __init__(self, ablation: AblationConfig | None = None):
        self.ablation = ablation or AblationConfig()

    def sample_ratio(self, prior: BetaPrior, rng: np.random.Generator) -> float:
        return sample_ratio(prior, rng)

    def sample_mask(
        self, token_map: TokenMap, rho: float, monograms: MonogramCounts, rng: np.random.Generator
    ) -> AttentionMask:
        return sample_mask(token_map, rho, monograms, rng)

    def generate_path(
        self,
        mask: AttentionMask,
        token_map: TokenMap,
        tables: TransitionTables,
        index: NGramIndex,
        cfg: MaskConfig,
    ) -> PseudoPath:
        return generate_path(mask, token_map, tables, index, cfg, self.ablation.use_higher_order)

    def generate_example(
        self,
        token_map: TokenMap,
        priors: SaliencePriorSet,
        tables: TransitionTables,
        index: NGramIndex,
        cfg: MaskConfig,
        example_id: int = 0,
    ) -> PseudoExample:
        """Ratio, mask and path of one example from the generator ``default_rng(seed ^ example_id)``."""
        rng = derived_rng(cfg.rng_seed, example_id)
        rho = self.sample_ratio(priors.pooled_prior(cfg.mode), rng)
        mask = self.sample_mask(token_map, rho, priors.monograms(cfg.mode), rng)
        path = self.generate_path(mask, token_map, tables, index, cfg)
        logger.debug(
            "Generated pseudo path",
            example_id=example_id,
            tokens=len(token_map),
            rho=round(rho, 6),
            masked=mask.popcount,
            grams=len(path),
        )
        return PseudoExample(example_id=example_id, rho=rho, mask=mask, path=path)

    def generate_examples(
        self,
        token_maps: Sequence[TokenMap],
        priors: SaliencePriorSet,
        tables: TransitionTables,
        index: NGramIndex,
        cfg: MaskConfig,
    ) -> list[PseudoExample]:
        examples = [
            self.generate_example(token_map, priors, tables, index, cfg, example_id)
            for example_id, token_map in enumerate(token_maps)
        ]
        logger.info(
            "Generated pseudo attention",
            mode=cfg.mode.value,
            examples=len(examples),
            masked=sum(example.mask.popcount for example in examples),
        )
        return examples

    def save(self, examples: Sequence[PseudoExample], cfg: MaskConfig, path: str | Path) -> int:
        return write_canonical_json(path, pseudo_to_dict(cfg.mode, cfg.rng_seed, examples))

    @staticmethod
    def load(path: str | Path) -> tuple[SessionMode, int, list[PseudoExample]]:
        return pseudo_from_dict(load_artifact_payload(path, artifact_name="pseudo"))
