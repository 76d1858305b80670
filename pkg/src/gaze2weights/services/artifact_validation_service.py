"""Re-checks the invariants of a written artifact bundle."""

from __future__ import annotations

import math
from collections import defaultdict
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import structlog

from ..config.settings import RunConfig
from ..core.artifacts import POOLED_KEY, NGramIndex, PseudoExample, ShardMap, TransitionTables, WeightVector
from ..core.entities import SessionMode
from ..exceptions import Gaze2WeightsException
from ..utils.artifact_loader import load_artifact_payload
from ..utils.storage import file_digest
from .pipeline_service import (
    ARTIFACT_FILES,
    MANIFEST_FILE,
    PRIORS_FILE,
    PSEUDO_FILE,
    SHARDS_FILE,
    TABLES_FILE,
    WEIGHTS_FILE,
)
from .pseudo_attention_service import PseudoAttentionService
from .transition_service import TransitionService
from .weight_projection_service import WeightProjectionService

logger = structlog.get_logger()

NORMALIZATION_TOLERANCE = 1e-9
FLOAT_TOLERANCE = 1e-12


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class ValidationReport:
    """Pass/fail entry per invariant check."""

    bundle: Path
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> list[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def get(self, name: str) -> CheckResult:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "bundle": str(self.bundle),
            "passed": self.passed,
            "checks": [check.to_dict() for check in self.checks],
        }


class ArtifactValidationService:
    """Loads a bundle directory and reports one result per invariant."""

    def __init__(self, bundle_dir: str | Path):
        self.bundle_dir = Path(bundle_dir)
        self._cache: dict[str, Any] = {}

    def _load(self, name: str, loader: Callable[[Path], Any]) -> Any:
        if name not in self._cache:
            self._cache[name] = loader(self.bundle_dir / name)
        return self._cache[name]

    def _manifest(self) -> dict[str, Any]:
        return self._load(MANIFEST_FILE, lambda path: load_artifact_payload(path, artifact_name="manifest"))

    def _config(self) -> dict[str, Any]:
        manifest = self._manifest()
        return manifest.get("config", {}) if isinstance(manifest, dict) else {}

    def _mode(self) -> SessionMode:
        return SessionMode(self._config().get("mode", SessionMode.COMBINED.value))

    def _tables(self) -> dict[SessionMode, tuple[TransitionTables, NGramIndex]]:
        return self._load(TABLES_FILE, TransitionService.load)

    def _pseudo(self) -> list[PseudoExample]:
        return self._load(PSEUDO_FILE, lambda path: PseudoAttentionService.load(path)[2])

    def _shards(self) -> dict[int, ShardMap]:
        return self._load(SHARDS_FILE, WeightProjectionService.load_shards)

    def _weights(self) -> dict[int, WeightVector]:
        return self._load(WEIGHTS_FILE, WeightProjectionService.load_weights)

    # -- checks ---------------------------------------------------------

    def check_priors(self) -> str:
        payload = load_artifact_payload(self.bundle_dir / PRIORS_FILE, artifact_name="priors")
        for mode_name, classes in payload.items():
            if POOLED_KEY not in classes:
                return f"mode {mode_name}: pooled prior missing"
            for label, entry in classes.items():
                alpha, beta = float(entry["alpha"]), float(entry["beta"])
                if alpha < 1 or beta < 1:
                    return f"{mode_name}/{label}: parameters below 1 ({alpha}, {beta})"
                if abs(float(entry["mean"]) - alpha / (alpha + beta)) > FLOAT_TOLERANCE:
                    return f"{mode_name}/{label}: mean disagrees with alpha/(alpha+beta)"
                if label == POOLED_KEY:
                    continue
                c1, n_tok = int(entry["c1"]), int(entry["n_tok"])
                if alpha != c1 + 1 or beta != max(1, n_tok - c1 + 1):
                    return f"{mode_name}/{label}: parameters do not follow the monogram counts"
        return ""

    def check_pruning(self) -> str:
        threshold = int(self._config().get("prune_threshold", 5))
        for mode, (tables, _) in self._tables().items():
            for name, counts in (("c2", tables.c2), ("c3", tables.c3)):
                low = [gram for gram, count in counts.items() if count < threshold]
                if low:
                    return f"{mode.value}/{name}: {len(low)} entries below {threshold}, e.g. {'→'.join(low[0])}"
        return ""

    def check_normalization(self) -> str:
        for mode, (tables, _) in self._tables().items():
            for name, counts, probs in (("p2", tables.c2, tables.p2), ("p3", tables.c3, tables.p3)):
                if set(counts) != set(probs):
                    return f"{mode.value}/{name}: probability keys differ from count keys"
                totals: dict[tuple[str, ...], float] = defaultdict(float)
                for gram, probability in probs.items():
                    totals[gram[:-1]] += probability
                for context, total in totals.items():
                    if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
                        return f"{mode.value}/{name}: context {'→'.join(context)} sums to {total!r}"
        return ""

    def check_index(self) -> str:
        taxonomy = tuple(self._config().get("taxonomy", ()))
        for mode, (tables, index) in self._tables().items():
            grams = index.grams()
            if taxonomy and grams[: len(taxonomy)] != [(label,) for label in taxonomy]:
                return f"{mode.value}: index does not start with the taxonomy classes"
            missing = [gram for gram in list(tables.p2) + list(tables.p3) if gram not in index]
            if missing:
                return f"{mode.value}: {len(missing)} n-grams missing from the index"
        return ""

    def check_pseudo_coverage(self) -> str:
        _, index = self._tables()[self._mode()]
        for example in self._pseudo():
            covered = example.path.covered_tokens()
            if covered != example.mask.masked_positions():
                return f"example {example.example_id}: covered tokens differ from the masked positions"
            if example.mask.popcount != example.mask.m:
                return f"example {example.example_id}: popcount {example.mask.popcount} != m {example.mask.m}"
            if example.mask.m != math.floor(example.rho * example.token_count):
                return f"example {example.example_id}: m differs from floor(rho * n)"
            for gram in example.path.grams:
                if gram.gram not in index or index.index_of(gram.gram) != gram.index:
                    return f"example {example.example_id}: gram {'→'.join(gram.gram)} unresolvable in the index"
        return ""

    def check_length_law(self) -> str:
        shards, weights = self._shards(), self._weights()
        example_ids = {example.example_id for example in self._pseudo()}
        if set(shards) != example_ids:
            return "shard maps do not cover every pseudo example"
        for example_id in sorted(example_ids):
            if example_id not in weights:
                return f"example {example_id}: weight record missing"
            if len(weights[example_id]) != shards[example_id].total:
                return f"example {example_id}: {len(weights[example_id])} weights for {shards[example_id].total} shards"
        return ""

    def check_constancy(self) -> str:
        shards, weights = self._shards(), self._weights()
        for example_id, shard_map in shards.items():
            if example_id not in weights:
                continue
            vector = weights[example_id].weights
            cursor = 0
            for token_id, count in enumerate(shard_map.shard_counts()):
                block = vector[cursor : cursor + count]
                if block.size and (block != block[0]).any():
                    return f"example {example_id}: shards of token {token_id} carry different weights"
                cursor += count
        return ""

    def check_base_floor(self) -> str:
        w_base = float(self._config().get("w_base", 0.0))
        for example_id, vector in self._weights().items():
            if vector.weights.size and float(vector.weights.min()) < w_base - FLOAT_TOLERANCE:
                return f"example {example_id}: weight below w_base={w_base}"
        return ""

    def check_manifest(self) -> str:
        manifest = self._manifest()
        files = manifest.get("files", {})
        for name in ARTIFACT_FILES:
            if name not in files:
                return f"{name} is not listed in the manifest"
            if file_digest(self.bundle_dir / name) != files[name]:
                return f"{name} does not match its recorded size and hash"
        if manifest.get("total_bytes") != sum(int(entry["bytes"]) for entry in files.values()):
            return "total_bytes disagrees with the listed files"
        return ""

    def check_config_hash(self) -> str:
        manifest = self._manifest()
        recomputed = RunConfig(**self._config()).config_hash()
        if recomputed != manifest.get("config_hash"):
            return "config hash does not match its recomputation"
        return ""

    CHECKS: tuple[tuple[str, str], ...] = (
        ("priors", "check_priors"),
        ("pruning", "check_pruning"),
        ("normalization", "check_normalization"),
        ("index", "check_index"),
        ("pseudo_coverage", "check_pseudo_coverage"),
        ("length_law", "check_length_law"),
        ("constancy", "check_constancy"),
        ("base_floor", "check_base_floor"),
        ("manifest", "check_manifest"),
        ("config_hash", "check_config_hash"),
    )

    def validate(self) -> ValidationReport:
        """Run every check; load or format errors become failing entries."""
        report = ValidationReport(bundle=self.bundle_dir)
        for name, method in self.CHECKS:
            try:
                problem = getattr(self, method)()
            except (Gaze2WeightsException, KeyError, TypeError, ValueError, AttributeError) as exc:
                problem = f"{type(exc).__name__}: {exc}"
            report.checks.append(CheckResult(name=name, passed=not problem, detail=problem))
        logger.info(
            "Validated bundle",
            bundle=str(self.bundle_dir),
            passed=report.passed,
            failures=[check.name for check in report.failures()],
        )
        return report


def validate_artifacts(bundle_dir: str | Path) -> ValidationReport:
    return ArtifactValidationService(bundle_dir).validate()


__all__ = ["ArtifactValidationService", "CheckResult", "ValidationReport", "validate_artifacts"]
