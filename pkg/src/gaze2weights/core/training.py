"""Inputs and reports of the loss engine and the attention metrics."""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..exceptions import LossException, MetricsException

ROW_SUM_TOLERANCE = 1e-6
ROW_RENORMALIZE_TOLERANCE = 1e-3


@dataclass(frozen=True)
class LossInput:
    """Logit grid, targets, prompt mask and per-position weights of one example."""

    logits: np.ndarray
    targets: np.ndarray
    target_mask: np.ndarray
    weights: np.ndarray
    example_id: int = 0

    def __post_init__(self) -> None:
        if self.logits.ndim != 2:
            raise LossException("Logits must be a T x V grid", {"shape": list(self.logits.shape)})
        length, vocab = self.logits.shape
        for name in ("targets", "target_mask", "weights"):
            vector = getattr(self, name)
            if vector.shape != (length,):
                raise LossException(
                    f"'{name}' must have length T={length}",
                    {"name": name, "shape": list(vector.shape), "example_id": self.example_id},
                )
        if length and (self.targets.min() < 0 or self.targets.max() >= vocab):
            raise LossException("Target ids must lie in [0, V)", {"vocab": vocab, "example_id": self.example_id})
        if not np.all(np.isfinite(self.logits)):
            raise LossException("Logits contain non-finite values", {"example_id": self.example_id})
        if not np.all(np.isfinite(self.weights)):
            raise LossException("Weights contain non-finite values", {"example_id": self.example_id})

    @property
    def length(self) -> int:
        return int(self.logits.shape[0])

    @property
    def vocab_size(self) -> int:
        return int(self.logits.shape[1])

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any], example_id: int = 0) -> LossInput:
        try:
            logits = np.asarray(payload["logits"], dtype=np.float64)
            targets = np.asarray(payload["targets"], dtype=np.int64)
        except KeyError as exc:
            raise LossException(f"Loss input is missing '{exc.args[0]}'", {"example_id": example_id}) from exc
        length = logits.shape[0] if logits.ndim == 2 else 0
        mask = np.asarray(payload.get("mask", np.ones(length)), dtype=np.float64)
        weights = np.asarray(payload.get("weights", np.ones(length)), dtype=np.float64)
        return cls(
            logits=logits,
            targets=targets,
            target_mask=mask,
            weights=weights,
            example_id=int(payload.get("example_id", example_id)),
        )


@dataclass(frozen=True)
class PreferencePair:
    """Sequence log-probabilities of a winner and a loser under policy and reference."""

    policy_logprob_w: float
    policy_logprob_l: float
    ref_logprob_w: float
    ref_logprob_l: float

    def __post_init__(self) -> None:
        values = (self.policy_logprob_w, self.policy_logprob_l, self.ref_logprob_w, self.ref_logprob_l)
        if not all(np.isfinite(value) for value in values):
            raise LossException("Preference pair log-probabilities must be finite")

    @property
    def margin(self) -> float:
        return (self.policy_logprob_w - self.ref_logprob_w) - (self.policy_logprob_l - self.ref_logprob_l)

    def swapped(self) -> PreferencePair:
        return PreferencePair(self.policy_logprob_l, self.policy_logprob_w, self.ref_logprob_l, self.ref_logprob_w)

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> PreferencePair:
        try:
            return cls(
                float(payload["policy_logprob_w"]),
                float(payload["policy_logprob_l"]),
                float(payload["ref_logprob_w"]),
                float(payload["ref_logprob_l"]),
            )
        except KeyError as exc:
            raise LossException(f"Preference pair is missing '{exc.args[0]}'") from exc


@dataclass(frozen=True)
class DpoConfig:
    """KL strength of the preference term and its weight in the combined objective."""

    beta_kl: float = 0.1
    gamma: float = 0.5

    def __post_init__(self) -> None:
        if not self.beta_kl > 0:
            raise LossException("beta_kl must be > 0", {"beta_kl": self.beta_kl})
        if not self.gamma >= 0:
            raise LossException("gamma must be >= 0", {"gamma": self.gamma})


@dataclass
class LossReport:
    sft: float
    dpo: float
    combined: float
    grad_check_max_rel_err: float | None = None
    examples: int = 0
    pairs: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "sft": self.sft,
            "dpo": self.dpo,
            "combined": self.combined,
            "grad_check_max_rel_err": self.grad_check_max_rel_err,
            "examples": self.examples,
            "pairs": self.pairs,
        }


@dataclass(frozen=True)
class AttentionRow:
    """Normalized, nonnegative attention distribution over n input tokens."""

    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.ndim != 1 or self.values.size == 0:
            raise MetricsException("Attention row must be a non-empty vector")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise MetricsException("Attention weights must be finite and nonnegative")
        total = float(self.values.sum())
        if abs(total - 1.0) > ROW_SUM_TOLERANCE:
            raise MetricsException("Attention row must sum to 1", {"sum": total})

    @classmethod
    def from_values(cls, values: Iterable[float], tolerance: float = ROW_RENORMALIZE_TOLERANCE) -> AttentionRow:
        """Build a row, renormalizing sums within ``tolerance`` of 1 and rejecting the rest."""
        array = np.asarray(list(values), dtype=np.float64)
        if array.ndim != 1 or array.size == 0:
            raise MetricsException("Attention row must be a non-empty vector")
        total = float(array.sum())
        if abs(total - 1.0) > tolerance:
            raise MetricsException(
                f"Attention row sums to {total:.6f}; expected 1 within {tolerance}",
                {"sum": total},
            )
        return cls(array / total)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class CriticalSet:
    """0-based indices of semantically critical input tokens."""

    indices: tuple[int, ...]

    @classmethod
    def of(cls, indices: Sequence[int]) -> CriticalSet:
        return cls(tuple(sorted({int(index) for index in indices})))

    def __len__(self) -> int:
        return len(self.indices)


@dataclass
class MetricsReport:
    gcs: float | None
    rfs: float
    afs: float | None
    entropy: float
    batch_entropy: float
    rows: int
    k: int
    per_row: list[dict[str, float]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "gcs": self.gcs,
            "rfs": self.rfs,
            "afs": self.afs,
            "entropy": self.entropy,
            "batch_entropy": self.batch_entropy,
            "rows": self.rows,
            "k": self.k,
            "per_row": self.per_row,
        }
