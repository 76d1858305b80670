"""Token maps and fixation-to-token alignment."""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

import numpy as np
import structlog

from ..core.entities import Fixation, PathEntry, ScanPath, SessionMode, TokenMap
from ..exceptions import TokenMapException
from ..ports.source_classifier import SourceClassifierPort
from ..utils.artifact_loader import load_artifact_payload, load_scan_paths, token_map_from_dict
from ..utils.storage import write_canonical_json

logger = structlog.get_logger()


def find_overlaps(token_map: TokenMap) -> list[tuple[int, int]]:
    """Pairs of token ids whose boxes share positive area."""
    ordered = sorted(token_map.tokens, key=lambda token: (token.bbox.y0, token.bbox.x0, token.id))
    overlaps = []
    for position, token in enumerate(ordered):
        for other in ordered[position + 1 :]:
            if other.bbox.y0 >= token.bbox.y1:
                break
            if token.bbox.overlaps(other.bbox):
                overlaps.append((min(token.id, other.id), max(token.id, other.id)))
    return sorted(overlaps)


def validate_token_map(token_map: TokenMap) -> TokenMap:
    overlaps = find_overlaps(token_map)
    if overlaps:
        first, second = overlaps[0]
        raise TokenMapException(
            f"Bounding boxes of tokens {first} and {second} overlap",
            {"overlaps": [list(pair) for pair in overlaps]},
        )
    return token_map


def align_fixations(
    fixations: Sequence[Fixation],
    token_map: TokenMap,
    mode: SessionMode,
    session_id: str | None = None,
) -> tuple[ScanPath, float]:
    """Map each fixation centroid to the token box containing it; unmatched fixations are discarded.

    Consecutive fixations on the same token are all kept.
    """
    if len(token_map) == 0:
        raise TokenMapException("Cannot align fixations against an empty token map")
    if not fixations:
        return ScanPath(session_mode=mode, entries=(), session_id=session_id), 0.0

    boxes = np.array([token.bbox.to_list() for token in token_map.tokens], dtype=np.float64)
    entries = []
    for index, fixation in enumerate(fixations):
        inside = (
            (boxes[:, 0] <= fixation.centroid_x)
            & (fixation.centroid_x < boxes[:, 2])
            & (boxes[:, 1] <= fixation.centroid_y)
            & (fixation.centroid_y < boxes[:, 3])
        )
        hits = np.flatnonzero(inside)
        if hits.size:
            entries.append(PathEntry(index, int(hits[0])))
    discard_ratio = 1.0 - len(entries) / len(fixations)
    return ScanPath(session_mode=mode, entries=tuple(entries), session_id=session_id), discard_ratio


class TokenAlignmentService:
    """Builds token maps and aligns segmented fixations onto them."""

    def __init__(
        self,
        classifier: SourceClassifierPort | None = None,
        cell_width: float = 8.0,
        cell_height: float = 16.0,
        taxonomy: tuple[str, ...] | None = None,
    ):
        if classifier is None:
            from ..adapters.java_subset_classifier import JavaSubsetClassifier

            classifier = JavaSubsetClassifier()
        self.classifier = classifier
        self.cell_width = cell_width
        self.cell_height = cell_height
        self.taxonomy = taxonomy

    def load_token_map(self, path: str | Path) -> TokenMap:
        """Load and validate a JSON/YAML token map."""
        payload = load_artifact_payload(path, artifact_name="token map")
        token_map = validate_token_map(token_map_from_dict(payload, self.taxonomy))
        logger.debug("Loaded token map", path=str(path), tokens=len(token_map))
        return token_map

    def classify_source(self, source: str) -> TokenMap:
        return validate_token_map(
            self.classifier.classify(source, self.cell_width, self.cell_height, self.taxonomy)
        )

    def classify_file(self, path: str | Path) -> TokenMap:
        return self.classify_source(Path(path).read_text(encoding="utf-8"))

    def load_stimulus(self, path: str | Path) -> TokenMap:
        """Token map from a ``.java`` snippet or a JSON/YAML token map file."""
        if Path(path).suffix.lower() == ".java":
            return self.classify_file(path)
        return self.load_token_map(path)

    def align_fixations(
        self,
        fixations: Sequence[Fixation],
        token_map: TokenMap,
        mode: SessionMode,
        session_id: str | None = None,
    ) -> tuple[ScanPath, float]:
        path, discard_ratio = align_fixations(fixations, token_map, mode, session_id)
        logger.debug(
            "Aligned fixations",
            session=session_id,
            fixations=len(fixations),
            entries=len(path),
            discard_ratio=round(discard_ratio, 4),
        )
        return path, discard_ratio

    def save_token_map(self, token_map: TokenMap, path: str | Path) -> int:
        return write_canonical_json(path, token_map.to_dict())

    def save_scan_path(self, scan_path: ScanPath, path: str | Path) -> int:
        return write_canonical_json(path, scan_path.to_dict())

    def load_scan_path(self, path: str | Path) -> ScanPath:
        paths = load_scan_paths(path)
        if len(paths) != 1:
            raise TokenMapException("Expected exactly one scan path", {"path": str(path), "found": len(paths)})
        return paths[0]

    def load_scan_paths(self, location: str | Path) -> list[ScanPath]:
        return load_scan_paths(location)
