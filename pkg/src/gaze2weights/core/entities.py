"""Core domain entities: gaze events, code tokens and token-level scan paths."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from ..exceptions import GazeDataException, TokenMapException


class SessionMode(str, Enum):
    """Eye-tracking session modes."""

    READING = "reading"
    WRITING = "writing"
    COMBINED = "combined"


class Validity(str, Enum):
    """Per-sample validity flag reported by the tracker."""

    VALID = "valid"
    BLINK = "blink"
    OFFSCREEN = "offscreen"


@dataclass(frozen=True)
class GazeSample:
    """One raw gaze sample in screen pixels."""

    timestamp: float
    x: float
    y: float
    validity: Validity = Validity.VALID

    @property
    def is_valid(self) -> bool:
        return self.validity == Validity.VALID and math.isfinite(self.x) and math.isfinite(self.y)


@dataclass(frozen=True)
class SessionGeometry:
    """Screen geometry needed to express angular thresholds in pixels."""

    sample_rate: float
    pixels_per_degree: float
    screen_w: int
    screen_h: int

    def __post_init__(self) -> None:
        for name in ("sample_rate", "pixels_per_degree", "screen_w", "screen_h"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise GazeDataException(f"Session geometry field '{name}' must be strictly positive", {name: value})

    @property
    def sample_period_ms(self) -> float:
        return 1000.0 / self.sample_rate

    def to_dict(self) -> dict[str, Any]:
        return {
            "sample_rate": self.sample_rate,
            "pixels_per_degree": self.pixels_per_degree,
            "screen_w": self.screen_w,
            "screen_h": self.screen_h,
        }


@dataclass(frozen=True)
class Fixation:
    """A dispersion-bounded pause of the gaze."""

    start: float
    duration: float
    centroid_x: float
    centroid_y: float
    sample_count: int
    dispersion_px: float = 0.0

    @property
    def end(self) -> float:
        return self.start + self.duration

    def to_dict(self) -> dict[str, Any]:
        return {
            "start": self.start,
            "duration": self.duration,
            "centroid_x": self.centroid_x,
            "centroid_y": self.centroid_y,
            "sample_count": self.sample_count,
            "dispersion_px": self.dispersion_px,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Fixation:
        return cls(
            start=float(data["start"]),
            duration=float(data["duration"]),
            centroid_x=float(data["centroid_x"]),
            centroid_y=float(data["centroid_y"]),
            sample_count=int(data["sample_count"]),
            dispersion_px=float(data.get("dispersion_px", 0.0)),
        )


@dataclass(frozen=True)
class Saccade:
    """Movement between two consecutive fixations."""

    from_fixation: int
    to_fixation: int
    duration: float
    amplitude_px: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "from_fixation": self.from_fixation,
            "to_fixation": self.to_fixation,
            "duration": self.duration,
            "amplitude_px": self.amplitude_px,
        }


@dataclass
class SegmentedSession:
    """Fixations and saccades recovered from one gaze stream."""

    fixations: list[Fixation] = field(default_factory=list)
    saccades: list[Saccade] = field(default_factory=list)
    kept_samples: int = 0
    dropped_samples: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "fixations": [fixation.to_dict() for fixation in self.fixations],
            "saccades": [saccade.to_dict() for saccade in self.saccades],
            "kept_samples": self.kept_samples,
            "dropped_samples": self.dropped_samples,
        }


@dataclass(frozen=True)
class BoundingBox:
    """Half-open screen rectangle ``[x0, x1) x [y0, y1)``."""

    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def is_degenerate(self) -> bool:
        return not (self.x1 > self.x0 and self.y1 > self.y0)

    @property
    def center(self) -> tuple[float, float]:
        return (self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0

    def contains(self, x: float, y: float) -> bool:
        return self.x0 <= x < self.x1 and self.y0 <= y < self.y1

    def overlaps(self, other: BoundingBox) -> bool:
        return self.x0 < other.x1 and other.x0 < self.x1 and self.y0 < other.y1 and other.y0 < self.y1

    def to_list(self) -> list[float]:
        return [self.x0, self.y0, self.x1, self.y1]


@dataclass(frozen=True)
class AstToken:
    """Leaf token of a code snippet with its semantic class and screen box."""

    id: int
    text: str
    semantic_class: str
    line: int
    bbox: BoundingBox

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "text": self.text,
            "class": self.semantic_class,
            "line": self.line,
            "bbox": self.bbox.to_list(),
        }


@dataclass(frozen=True)
class TokenMap:
    """Ordered leaf tokens of one snippet plus the class taxonomy they draw from."""

    tokens: tuple[AstToken, ...]
    taxonomy: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.taxonomy)) != len(self.taxonomy):
            raise TokenMapException("Taxonomy contains duplicate class labels", {"taxonomy": list(self.taxonomy)})
        known = set(self.taxonomy)
        for position, token in enumerate(self.tokens):
            if token.id != position:
                raise TokenMapException(
                    "Token ids must be dense 0..M-1 in order",
                    {"position": position, "token_id": token.id},
                )
            if token.semantic_class not in known:
                raise TokenMapException(
                    f"Unknown class label '{token.semantic_class}'",
                    {"token_id": token.id, "class": token.semantic_class},
                )
            if token.line < 1:
                raise TokenMapException("Token line numbers are 1-based", {"token_id": token.id, "line": token.line})
            if token.bbox.is_degenerate:
                raise TokenMapException("Degenerate bounding box", {"token_id": token.id, "bbox": token.bbox.to_list()})

    def __len__(self) -> int:
        return len(self.tokens)

    def class_of(self, token_id: int) -> str:
        return self.tokens[token_id].semantic_class

    def class_counts(self) -> dict[str, int]:
        counts = dict.fromkeys(self.taxonomy, 0)
        for token in self.tokens:
            counts[token.semantic_class] += 1
        return counts

    def positions_by_class(self) -> dict[str, list[int]]:
        positions: dict[str, list[int]] = {label: [] for label in self.taxonomy}
        for token in self.tokens:
            positions[token.semantic_class].append(token.id)
        return positions

    def to_dict(self) -> dict[str, Any]:
        return {"taxonomy": list(self.taxonomy), "tokens": [token.to_dict() for token in self.tokens]}


@dataclass(frozen=True)
class PathEntry:
    """One fixation aligned to one token."""

    fixation_index: int
    token_id: int


@dataclass(frozen=True)
class ScanPath:
    """Token-level scan path of one session, in fixation order."""

    session_mode: SessionMode
    entries: tuple[PathEntry, ...] = ()
    session_id: str | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def token_ids(self) -> list[int]:
        return [entry.token_id for entry in self.entries]

    def class_sequence(self, token_map: TokenMap) -> list[str]:
        return [token_map.class_of(entry.token_id) for entry in self.entries]

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "mode": self.session_mode.value,
            "entries": [[entry.fixation_index, entry.token_id] for entry in self.entries],
        }
        if self.session_id is not None:
            payload["session_id"] = self.session_id
        return payload

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ScanPath:
        return cls(
            session_mode=SessionMode(data["mode"]),
            entries=tuple(PathEntry(int(fixation), int(token)) for fixation, token in data.get("entries", [])),
            session_id=data.get("session_id"),
        )
