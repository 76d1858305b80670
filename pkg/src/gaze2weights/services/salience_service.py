"""Beta salience priors fitted from monogram fixation counts."""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path
from typing import Union

import numpy as np
import structlog
from scipy.special import betaln

from ..core.artifacts import POOLED_KEY, BetaPrior, MonogramCounts, SaliencePriorSet
from ..core.entities import ScanPath, SessionMode, TokenMap
from ..exceptions import SalienceException
from ..utils.artifact_loader import load_artifact_payload
from ..utils.storage import write_canonical_json

logger = structlog.get_logger()

TokenMaps = Union[TokenMap, Sequence[TokenMap]]


def _pair_maps(paths: Sequence[ScanPath], token_maps: TokenMaps) -> list[tuple[ScanPath, TokenMap]]:
    if isinstance(token_maps, TokenMap):
        return [(path, token_maps) for path in paths]
    if len(token_maps) != len(paths):
        raise SalienceException(
            "One token map per scan path is required", {"paths": len(paths), "maps": len(token_maps)}
        )
    return list(zip(paths, token_maps))


def count_monograms(
    paths: Sequence[ScanPath],
    token_maps: TokenMaps,
    taxonomy: Sequence[str] | None = None,
) -> MonogramCounts:
    """Count fixations per class (``c1``) and token exposures per class (``n_tok``).

    Each scan path is one exposure of its stimulus, so a map's class counts
    are added once per path.
    """
    pairs = _pair_maps(paths, token_maps)
    if taxonomy is None:
        if isinstance(token_maps, TokenMap):
            taxonomy = token_maps.taxonomy
        else:
            taxonomy = pairs[0][1].taxonomy if pairs else ()
    known = set(taxonomy)
    fixations = dict.fromkeys(taxonomy, 0)
    tokens = dict.fromkeys(taxonomy, 0)
    for path, token_map in pairs:
        for label, count in token_map.class_counts().items():
            if count and label not in known:
                raise SalienceException(f"Class '{label}' is missing from the taxonomy", {"class": label})
            if label in known:
                tokens[label] += count
        for entry in path.entries:
            if not 0 <= entry.token_id < len(token_map):
                raise SalienceException(
                    "Scan path references a token outside its map",
                    {"token_id": entry.token_id, "tokens": len(token_map)},
                )
            fixations[token_map.class_of(entry.token_id)] += 1
    return MonogramCounts(fixations=fixations, tokens=tokens)


def fit_beta(
    c1: int,
    n_tok: int,
    label: str = POOLED_KEY,
    mode: SessionMode = SessionMode.COMBINED,
) -> BetaPrior:
    """``alpha = c1 + 1``, ``beta = max(1, n_tok - c1 + 1)``."""
    if c1 < 0 or n_tok < 0:
        raise SalienceException("Counts must be nonnegative", {"c1": c1, "n_tok": n_tok, "class": label})
    return BetaPrior(alpha=float(c1 + 1), beta=float(max(1, n_tok - c1 + 1)), label=label, mode=mode)


def posterior_mean(prior: BetaPrior) -> float:
    return prior.alpha / (prior.alpha + prior.beta)


def beta_log_pdf(prior: BetaPrior, x: float | np.ndarray) -> float | np.ndarray:
    values = np.asarray(x, dtype=np.float64)
    if np.any((values <= 0.0) | (values >= 1.0)):
        raise SalienceException("Beta density is defined on the open interval (0, 1)", {"x": values.tolist()})
    log_density = (prior.alpha - 1.0) * np.log(values) + (prior.beta - 1.0) * np.log1p(-values)
    return log_density - betaln(prior.alpha, prior.beta)


def beta_pdf(prior: BetaPrior, x: float) -> float:
    """Density of ``prior`` at ``x``, evaluated in log space."""
    return float(np.exp(beta_log_pdf(prior, x)))


def beta_curve(prior: BetaPrior, xs: Sequence[float] | np.ndarray) -> np.ndarray:
    return np.exp(beta_log_pdf(prior, np.asarray(xs, dtype=np.float64)))


def bayes_update(prior: BetaPrior, k: int, n: int) -> BetaPrior:
    """Conjugate update with ``k`` successes in ``n`` trials."""
    if k < 0 or n < 0 or k > n:
        raise SalienceException("Update requires 0 <= k <= n", {"k": k, "n": n})
    return BetaPrior(prior.alpha + k, prior.beta + n - k, prior.label, prior.mode)


def pooled_prior(counts: MonogramCounts, mode: SessionMode = SessionMode.COMBINED) -> BetaPrior:
    """Prior over all classes at once, used to draw the salience ratio."""
    c1 = counts.total_fixations()
    n_tok = sum(counts.tokens.values())
    return fit_beta(c1, n_tok, POOLED_KEY, mode)


def fit_priors(counts: MonogramCounts, taxonomy: Sequence[str], mode: SessionMode) -> dict[str, BetaPrior]:
    return {label: fit_beta(counts.c1(label), counts.n_tok(label), label, mode) for label in taxonomy}


class SalienceService:
    """Fits per-mode salience priors and persists them."""

    def __init__(self, taxonomy: Sequence[str]):
        self.taxonomy = tuple(taxonomy)

    def count_monograms(self, paths: Sequence[ScanPath], token_maps: TokenMaps) -> MonogramCounts:
        return count_monograms(paths, token_maps, self.taxonomy)

    def fit_prior_set(self, paths: Sequence[ScanPath], token_maps: TokenMaps) -> SaliencePriorSet:
        """Fit reading, writing and combined priors; combined pools every path."""
        pairs = _pair_maps(paths, token_maps)
        groups: dict[SessionMode, list[tuple[ScanPath, TokenMap]]] = {
            SessionMode.READING: [pair for pair in pairs if pair[0].session_mode == SessionMode.READING],
            SessionMode.WRITING: [pair for pair in pairs if pair[0].session_mode == SessionMode.WRITING],
            SessionMode.COMBINED: pairs,
        }
        priors: dict[tuple[str, SessionMode], BetaPrior] = {}
        pooled: dict[SessionMode, BetaPrior] = {}
        counts: dict[SessionMode, MonogramCounts] = {}
        for mode, group in groups.items():
            mode_counts = count_monograms([p for p, _ in group], [m for _, m in group], self.taxonomy)
            counts[mode] = mode_counts
            for label, prior in fit_priors(mode_counts, self.taxonomy, mode).items():
                priors[(label, mode)] = prior
            pooled[mode] = pooled_prior(mode_counts, mode)
            logger.info(
                "Fitted salience priors",
                mode=mode.value,
                paths=len(group),
                fixations=mode_counts.total_fixations(),
                pooled_mean=round(pooled[mode].mean, 6),
            )
        return SaliencePriorSet(priors=priors, pooled=pooled, counts=counts, taxonomy=self.taxonomy)

    def save(self, prior_set: SaliencePriorSet, path: str | Path) -> int:
        return write_canonical_json(path, prior_set.to_dict())

    @staticmethod
    def load(path: str | Path) -> SaliencePriorSet:
        payload = load_artifact_payload(path, artifact_name="priors")
        if not isinstance(payload, dict):
            raise SalienceException("Priors file must contain an object keyed by session mode")
        try:
            return SaliencePriorSet.from_dict(payload)
        except (KeyError, TypeError, ValueError) as exc:
            raise SalienceException(f"Malformed priors file {path}: {exc}") from exc
