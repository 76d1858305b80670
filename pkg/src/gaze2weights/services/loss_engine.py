"""Gaze-weighted SFT and token-level DPO objectives over precomputed logits and log-probabilities.

The engine runs no model: it evaluates the objectives, their analytic
gradient and a finite-difference check of that gradient in double precision.
"""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path
from typing import Any, Literal

import numpy as np
import structlog
from scipy.special import log_softmax, softmax

from ..core.training import DpoConfig, LossInput, LossReport, PreferencePair
from ..exceptions import LossException
from ..utils.artifact_loader import load_artifact_payload

logger = structlog.get_logger()

Reduction = Literal["sum", "mean"]

DEFAULT_FD_STEP = 1e-5
DEFAULT_RELATIVE_FLOOR = 1e-4


def _scale(inp: LossInput, reduction: Reduction) -> np.ndarray:
    scale = inp.weights * inp.target_mask
    if reduction == "mean":
        positions = int(np.count_nonzero(inp.target_mask))
        return scale / positions if positions else np.zeros_like(scale)
    if reduction != "sum":
        raise LossException(f"Unknown reduction '{reduction}'", {"reduction": reduction})
    return scale


def weighted_sft_loss(inp: LossInput, reduction: Reduction = "sum") -> float:
    """``-sum_j w_j * mask_j * log softmax(logits_j)[target_j]``."""
    if inp.length == 0:
        return 0.0
    log_probs = log_softmax(inp.logits, axis=1)
    picked = log_probs[np.arange(inp.length), inp.targets]
    return float(-np.sum(_scale(inp, reduction) * picked))


def weighted_sft_grad(inp: LossInput, reduction: Reduction = "sum") -> np.ndarray:
    """Gradient with respect to the logits: ``w_j * mask_j * (softmax(logits_j) - onehot(target_j))``."""
    grad = softmax(inp.logits, axis=1) if inp.length else np.zeros_like(inp.logits)
    grad[np.arange(inp.length), inp.targets] -= 1.0
    return _scale(inp, reduction)[:, None] * grad


def gradient_check(
    inp: LossInput, step: float = DEFAULT_FD_STEP, reduction: Reduction = "sum", eps: float = DEFAULT_RELATIVE_FLOOR
) -> float:
    """Max element-wise relative error between the analytic gradient and central finite differences.

    Each entry is compared as ``|a - n| / max(|a|, |n|, eps)``. Perturbing one
    logit only changes its own row, so each difference is taken over that
    row's loss term.
    """
    analytic = weighted_sft_grad(inp, reduction)
    scale = _scale(inp, reduction)
    numeric = np.zeros_like(analytic)
    for row in range(inp.length):
        if scale[row] == 0.0:
            continue
        target = inp.targets[row]
        base = inp.logits[row].copy()
        for column in range(inp.vocab_size):
            plus = base.copy()
            minus = base.copy()
            plus[column] += step
            minus[column] -= step
            loss_plus = -scale[row] * log_softmax(plus)[target]
            loss_minus = -scale[row] * log_softmax(minus)[target]
            numeric[row, column] = (loss_plus - loss_minus) / (2.0 * step)
    if analytic.size == 0:
        return 0.0
    denominator = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), eps)
    return float(np.max(np.abs(analytic - numeric) / denominator))


def dpo_loss(pair: PreferencePair, cfg: DpoConfig) -> float:
    """``-log sigmoid(beta * margin)``, evaluated as ``log(1 + exp(-beta * margin))``."""
    return float(np.logaddexp(0.0, -cfg.beta_kl * pair.margin))


def dpo_loss_batch(pairs: Sequence[PreferencePair], cfg: DpoConfig) -> float:
    """Mean preference loss over ``pairs``; 0 for an empty batch."""
    if not pairs:
        return 0.0
    total = 0.0
    for pair in pairs:
        total += dpo_loss(pair, cfg)
    return total / len(pairs)


def candidate_weight_sum(
    weights: Sequence[float] | np.ndarray, mask: Sequence[float] | np.ndarray | None = None
) -> float:
    """Sum of a candidate's shard weights, optionally restricted to masked positions."""
    values = np.asarray(weights, dtype=np.float64)
    if mask is not None:
        selector = np.asarray(mask, dtype=np.float64)
        if selector.shape != values.shape:
            raise LossException("Mask and weights must have the same length")
        values = values * selector
    return float(values.sum())


def sample_preference_pair(
    candidates: Sequence[tuple[Any, float]], rng: np.random.Generator
) -> tuple[Any, Any]:
    """Draw two distinct candidates proportionally to their weight sums; the heavier one wins.

    Candidates are sorted by id before drawing. On equal weight sums the first
    draw wins.
    """
    if len(candidates) < 2:
        raise LossException("At least two candidates are required", {"candidates": len(candidates)})
    ordered = sorted(candidates, key=lambda candidate: candidate[0])
    sums = np.array([float(weight) for _, weight in ordered], dtype=np.float64)
    if not np.all(np.isfinite(sums)) or np.any(sums <= 0):
        raise LossException("Candidate weight sums must be positive", {"weights": sums.tolist()})
    first, second = rng.choice(len(ordered), size=2, replace=False, p=sums / sums.sum())
    if sums[second] > sums[first]:
        first, second = second, first
    return ordered[first][0], ordered[second][0]


def combined_loss(sft: float, dpo: float, cfg: DpoConfig) -> float:
    """``L = L_SFT + gamma * L_DPO``."""
    if not (np.isfinite(sft) and np.isfinite(dpo)):
        raise LossException("Loss terms must be finite", {"sft": sft, "dpo": dpo})
    return float(sft + cfg.gamma * dpo)


def batch_from_payload(payload: Any) -> tuple[list[LossInput], list[PreferencePair]]:
    """Accept ``{examples, pairs}``, a list of examples, or one example object."""
    if isinstance(payload, list):
        payload = {"examples": payload}
    if not isinstance(payload, dict):
        raise LossException("Loss input must be an object or a list of examples")
    if "logits" in payload:
        payload = {"examples": [payload]}
    raw_examples = payload.get("examples", [])
    raw_pairs = payload.get("pairs", [])
    if not isinstance(raw_examples, list) or not isinstance(raw_pairs, list):
        raise LossException("'examples' and 'pairs' must be lists")
    examples = [LossInput.from_dict(item, example_id=position) for position, item in enumerate(raw_examples)]
    pairs = [PreferencePair.from_dict(item) for item in raw_pairs]
    return examples, pairs


class LossEngine:
    """Evaluates batches of loss inputs and preference pairs."""

    def __init__(self, cfg: DpoConfig | None = None, reduction: Reduction = "sum"):
        if reduction not in ("sum", "mean"):
            raise LossException(f"Unknown reduction '{reduction}'", {"reduction": reduction})
        self.cfg = cfg or DpoConfig()
        self.reduction: Reduction = reduction

    def weighted_sft_loss(self, inp: LossInput) -> float:
        return weighted_sft_loss(inp, self.reduction)

    def weighted_sft_grad(self, inp: LossInput) -> np.ndarray:
        return weighted_sft_grad(inp, self.reduction)

    def gradient_check(self, inp: LossInput, step: float = DEFAULT_FD_STEP) -> float:
        return gradient_check(inp, step, self.reduction)

    def dpo_loss(self, pair: PreferencePair) -> float:
        return dpo_loss(pair, self.cfg)

    def combined_loss(self, sft: float, dpo: float) -> float:
        return combined_loss(sft, dpo, self.cfg)

    def sample_preference_pair(
        self, candidates: Sequence[tuple[Any, float]], rng: np.random.Generator
    ) -> tuple[Any, Any]:
        return sample_preference_pair(candidates, rng)

    def evaluate_batch(
        self,
        examples: Sequence[LossInput],
        pairs: Sequence[PreferencePair] = (),
        check_grad: bool = False,
    ) -> LossReport:
        """SFT summed over examples in ``example_id`` order, DPO averaged over pairs."""
        sft = 0.0
        worst: float | None = None
        for inp in sorted(examples, key=lambda item: item.example_id):
            sft += self.weighted_sft_loss(inp)
            if check_grad:
                error = self.gradient_check(inp)
                worst = error if worst is None else max(worst, error)
        dpo = dpo_loss_batch(list(pairs), self.cfg)
        report = LossReport(
            sft=sft,
            dpo=dpo,
            combined=self.combined_loss(sft, dpo),
            grad_check_max_rel_err=worst,
            examples=len(examples),
            pairs=len(pairs),
        )
        logger.info(
            "Evaluated loss batch",
            examples=report.examples,
            pairs=report.pairs,
            sft=report.sft,
            dpo=report.dpo,
            grad_check=worst,
        )
        return report

    @staticmethod
    def load_batch(path: str | Path) -> tuple[list[LossInput], list[PreferencePair]]:
        return batch_from_payload(load_artifact_payload(path, artifact_name="loss input"))
