"""Distilled attention artifacts: salience priors, transition tables, masks, pseudo paths and weights."""

from __future__ import annotations

from collections import OrderedDict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..exceptions import ProjectionException, SalienceException, SamplingException, TransitionException
from .entities import SessionMode
from .taxonomy import join_gram, split_gram

Gram = tuple[str, ...]

POOLED_KEY = "__pooled__"


@dataclass
class MonogramCounts:
    """Per-class fixation counts ``c1(s)`` and token exposures ``n_tok(s)``."""

    fixations: dict[str, int] = field(default_factory=dict)
    tokens: dict[str, int] = field(default_factory=dict)

    def c1(self, label: str) -> int:
        return self.fixations.get(label, 0)

    def n_tok(self, label: str) -> int:
        return self.tokens.get(label, 0)

    def total_fixations(self) -> int:
        return sum(self.fixations.values())

    def shares(self, taxonomy: Iterable[str]) -> dict[str, float]:
        """Return ``p_s = c1(s) / sum c1``; all zero when nothing was fixated."""
        total = self.total_fixations()
        if total == 0:
            return dict.fromkeys(taxonomy, 0.0)
        return {label: self.c1(label) / total for label in taxonomy}

    def merge(self, other: MonogramCounts) -> MonogramCounts:
        fixations = dict(self.fixations)
        tokens = dict(self.tokens)
        for label, count in other.fixations.items():
            fixations[label] = fixations.get(label, 0) + count
        for label, count in other.tokens.items():
            tokens[label] = tokens.get(label, 0) + count
        return MonogramCounts(fixations=fixations, tokens=tokens)


@dataclass(frozen=True)
class BetaPrior:
    """Beta distribution over the probability that a token class attracts attention."""

    alpha: float
    beta: float
    label: str = POOLED_KEY
    mode: SessionMode = SessionMode.COMBINED

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and self.beta > 0):
            raise SalienceException(
                "Beta parameters must be positive",
                {"alpha": self.alpha, "beta": self.beta, "class": self.label},
            )

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)


@dataclass(frozen=True)
class SaliencePriorSet:
    """Fitted priors keyed by ``(class, mode)`` plus one pooled prior per mode."""

    priors: Mapping[tuple[str, SessionMode], BetaPrior]
    pooled: Mapping[SessionMode, BetaPrior]
    counts: Mapping[SessionMode, MonogramCounts]
    taxonomy: tuple[str, ...]

    def get(self, label: str, mode: SessionMode) -> BetaPrior:
        try:
            return self.priors[(label, mode)]
        except KeyError as exc:
            raise SalienceException(
                f"No prior fitted for class '{label}' in mode '{mode.value}'",
                {"class": label, "mode": mode.value},
            ) from exc

    def mean(self, label: str, mode: SessionMode) -> float:
        return self.get(label, mode).mean

    def pooled_prior(self, mode: SessionMode) -> BetaPrior:
        try:
            return self.pooled[mode]
        except KeyError as exc:
            raise SalienceException(f"No pooled prior for mode '{mode.value}'") from exc

    def monograms(self, mode: SessionMode) -> MonogramCounts:
        return self.counts.get(mode, MonogramCounts())

    def modes(self) -> list[SessionMode]:
        return [mode for mode in SessionMode if mode in self.pooled]

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {}
        for mode in self.modes():
            counts = self.monograms(mode)
            classes: dict[str, Any] = {}
            for label in self.taxonomy:
                prior = self.get(label, mode)
                classes[label] = {
                    "alpha": prior.alpha,
                    "beta": prior.beta,
                    "mean": prior.mean,
                    "c1": counts.c1(label),
                    "n_tok": counts.n_tok(label),
                }
            pooled = self.pooled_prior(mode)
            classes[POOLED_KEY] = {"alpha": pooled.alpha, "beta": pooled.beta, "mean": pooled.mean}
            payload[mode.value] = classes
        return payload

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> SaliencePriorSet:
        priors: dict[tuple[str, SessionMode], BetaPrior] = {}
        pooled: dict[SessionMode, BetaPrior] = {}
        counts: dict[SessionMode, MonogramCounts] = {}
        taxonomy: list[str] = []
        for mode_name, classes in payload.items():
            mode = SessionMode(mode_name)
            mode_counts = MonogramCounts()
            for label, entry in classes.items():
                prior = BetaPrior(float(entry["alpha"]), float(entry["beta"]), label, mode)
                if label == POOLED_KEY:
                    pooled[mode] = prior
                    continue
                priors[(label, mode)] = prior
                mode_counts.fixations[label] = int(entry.get("c1", 0))
                mode_counts.tokens[label] = int(entry.get("n_tok", 0))
                if label not in taxonomy:
                    taxonomy.append(label)
            counts[mode] = mode_counts
            if mode not in pooled:
                raise SalienceException(f"Priors for mode '{mode_name}' lack the pooled prior")
        return cls(priors=priors, pooled=pooled, counts=counts, taxonomy=tuple(taxonomy))


@dataclass(frozen=True)
class TransitionTables:
    """Pruned bigram/trigram counts with their conditional probabilities."""

    c2: Mapping[Gram, int]
    c3: Mapping[Gram, int]
    p2: Mapping[Gram, float]
    p3: Mapping[Gram, float]

    def has_bigram(self, gram: Gram) -> bool:
        return gram in self.c2

    def has_trigram(self, gram: Gram) -> bool:
        return gram in self.c3

    def to_dict(self) -> dict[str, Any]:
        return {
            "c2": {join_gram(gram): count for gram, count in self.c2.items()},
            "c3": {join_gram(gram): count for gram, count in self.c3.items()},
            "p2": {join_gram(gram): prob for gram, prob in self.p2.items()},
            "p3": {join_gram(gram): prob for gram, prob in self.p3.items()},
        }

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> TransitionTables:
        def _table(name: str, cast: type) -> dict[Gram, Any]:
            raw = payload.get(name, {})
            if not isinstance(raw, Mapping):
                raise TransitionException(f"'{name}' must be an object")
            return {split_gram(key): cast(value) for key, value in raw.items()}

        return cls(c2=_table("c2", int), c3=_table("c3", int), p2=_table("p2", float), p3=_table("p3", float))


class NGramIndex:
    """Ordered n-gram to integer index, seeded with every monogram class."""

    def __init__(self, grams: Iterable[Gram] = ()) -> None:
        self._index: OrderedDict[Gram, int] = OrderedDict()
        for gram in grams:
            self.add(gram)

    def add(self, gram: Gram) -> int:
        if gram not in self._index:
            self._index[gram] = len(self._index)
        return self._index[gram]

    def index_of(self, gram: Gram) -> int:
        try:
            return self._index[gram]
        except KeyError as exc:
            raise TransitionException(f"n-gram '{join_gram(gram)}' is not in the index") from exc

    def __contains__(self, gram: object) -> bool:
        return gram in self._index

    def __len__(self) -> int:
        return len(self._index)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, NGramIndex) and list(self._index.items()) == list(other._index.items())

    def __repr__(self) -> str:
        return f"NGramIndex(size={len(self)})"

    def grams(self) -> list[Gram]:
        return list(self._index)

    def to_list(self) -> list[str]:
        return [join_gram(gram) for gram in self._index]

    @classmethod
    def from_list(cls, keys: Iterable[str]) -> NGramIndex:
        return cls(split_gram(key) for key in keys)


@dataclass(frozen=True)
class MaskConfig:
    """Pseudo-attention sampling configuration for one session mode."""

    mode: SessionMode
    line_span: int
    rng_seed: int = 42

    def __post_init__(self) -> None:
        if self.line_span < 1:
            raise SamplingException("Line span L must be >= 1", {"line_span": self.line_span})


@dataclass(frozen=True)
class AblationConfig:
    """Switches that remove one gaze-derived component at a time."""

    use_salience: bool = True
    use_rarity: bool = True
    use_monograms: bool = True
    use_higher_order: bool = True

    def to_dict(self) -> dict[str, bool]:
        return {
            "use_salience": self.use_salience,
            "use_rarity": self.use_rarity,
            "use_monograms": self.use_monograms,
            "use_higher_order": self.use_higher_order,
        }


@dataclass(frozen=True)
class AttentionMask:
    """Sampled binary salience mask over the tokens of one example."""

    bits: tuple[int, ...]
    rho: float
    m: int
    quotas: Mapping[str, int] = field(default_factory=dict)
    selected_per_class: Mapping[str, int] = field(default_factory=dict)
    feasible: bool = True

    @property
    def popcount(self) -> int:
        return sum(self.bits)

    def masked_positions(self) -> list[int]:
        return [position for position, bit in enumerate(self.bits) if bit]


@dataclass(frozen=True)
class PseudoGram:
    """One emitted n-gram of a pseudo scan path."""

    gram: Gram
    index: int
    token_ids: tuple[int, ...]

    @property
    def arity(self) -> int:
        return len(self.gram)

    def to_dict(self) -> dict[str, Any]:
        return {"gram": list(self.gram), "index": self.index, "tokens": list(self.token_ids)}


@dataclass(frozen=True)
class PseudoPath:
    """Greedy, line-aware n-gram sequence covering the masked tokens."""

    grams: tuple[PseudoGram, ...] = ()

    def __len__(self) -> int:
        return len(self.grams)

    def covered_tokens(self) -> list[int]:
        return [token_id for gram in self.grams for token_id in gram.token_ids]

    def to_list(self) -> list[dict[str, Any]]:
        return [gram.to_dict() for gram in self.grams]

    @classmethod
    def from_list(cls, payload: Iterable[Mapping[str, Any]]) -> PseudoPath:
        return cls(
            tuple(
                PseudoGram(tuple(item["gram"]), int(item["index"]), tuple(int(t) for t in item["tokens"]))
                for item in payload
            )
        )


@dataclass(frozen=True)
class PseudoExample:
    """Sampled ratio, mask and pseudo path of one training example."""

    example_id: int
    rho: float
    mask: AttentionMask
    path: PseudoPath

    @property
    def token_count(self) -> int:
        return len(self.mask.bits)

    def to_dict(self) -> dict[str, Any]:
        return {
            "example_id": self.example_id,
            "rho": self.rho,
            "m": self.mask.m,
            "mask": list(self.mask.bits),
            "path": self.path.to_list(),
        }

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> PseudoExample:
        bits = tuple(int(bit) for bit in payload["mask"])
        rho = float(payload["rho"])
        mask = AttentionMask(bits=bits, rho=rho, m=int(payload.get("m", sum(bits))))
        return cls(
            example_id=int(payload["example_id"]),
            rho=rho,
            mask=mask,
            path=PseudoPath.from_list(payload.get("path", [])),
        )


@dataclass(frozen=True)
class ShardMap:
    """Subword slot indices for every AST token, in token order."""

    slots: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        expected: int | None = None
        for token_id, token_slots in enumerate(self.slots):
            if not token_slots:
                raise ProjectionException(
                    f"Token {token_id} has no shards; every source token must tokenize to at least one shard",
                    {"token_id": token_id},
                )
            for slot in token_slots:
                if expected is not None and slot != expected:
                    raise ProjectionException(
                        "Shard slots must form one contiguous ascending range in token order",
                        {"token_id": token_id, "slot": slot, "expected": expected},
                    )
                expected = slot + 1

    @property
    def offset(self) -> int:
        return self.slots[0][0] if self.slots else 0

    @property
    def total(self) -> int:
        return sum(len(token_slots) for token_slots in self.slots)

    def shard_counts(self) -> list[int]:
        return [len(token_slots) for token_slots in self.slots]

    def to_dict(self) -> dict[str, list[int]]:
        return {str(token_id): list(token_slots) for token_id, token_slots in enumerate(self.slots)}

    @classmethod
    def from_counts(cls, counts: Iterable[int], offset: int = 0) -> ShardMap:
        slots: list[tuple[int, ...]] = []
        cursor = offset
        for count in counts:
            slots.append(tuple(range(cursor, cursor + count)))
            cursor += count
        return cls(tuple(slots))

    @classmethod
    def from_dict(cls, payload: Mapping[str, Iterable[int]]) -> ShardMap:
        ordered = sorted(((int(key), tuple(int(slot) for slot in value)) for key, value in payload.items()))
        for expected, (token_id, _) in enumerate(ordered):
            if token_id != expected:
                raise ProjectionException("Shard map token ids must be dense 0..M-1", {"missing": expected})
        return cls(tuple(token_slots for _, token_slots in ordered))


@dataclass(frozen=True)
class WeightVector:
    """Per-slot training weights for one example."""

    weights: np.ndarray
    offset: int = 0

    def __len__(self) -> int:
        return int(self.weights.shape[0])

    def to_list(self) -> list[float]:
        return [float(value) for value in self.weights]
