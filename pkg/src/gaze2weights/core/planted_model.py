"""Planted statistics used to synthesise gaze corpora."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any

from ..exceptions import SimulationException

READING_FRACTION = 914 / 1565


@dataclass(frozen=True)
class PlantedModel:
    """Per-class salience, class transitions and fixation timing of a synthetic reader.

    ``transitions`` maps a class to its next-class distribution. When omitted,
    every row is the salience vector normalized to sum to 1.
    """

    salience: Mapping[str, float]
    transitions: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    fixation_duration_mean_ms: float = 220.0
    fixation_duration_sd_ms: float = 40.0
    session_count: int = 10
    session_length_range: tuple[int, int] = (40, 80)
    reading_fraction: float = READING_FRACTION
    jitter_deg: float = 0.2
    seed: int = 42

    def __post_init__(self) -> None:
        if not self.salience:
            raise SimulationException("Planted model needs at least one class")
        for label, probability in self.salience.items():
            if not 0.0 < probability < 1.0:
                raise SimulationException(
                    "Salience probabilities must lie in (0, 1)", {"class": label, "salience": probability}
                )
        for label, row in self.transitions.items():
            if label not in self.salience:
                raise SimulationException(f"Transition row for unknown class '{label}'")
            unknown = set(row) - set(self.salience)
            if unknown:
                raise SimulationException("Transition targets must be planted classes", {"unknown": sorted(unknown)})
            if any(probability < 0 for probability in row.values()):
                raise SimulationException("Transition probabilities must be nonnegative", {"class": label})
            if abs(sum(row.values()) - 1.0) > 1e-9:
                raise SimulationException("Transition rows must sum to 1", {"class": label, "sum": sum(row.values())})
        low, high = self.session_length_range
        if low < 1 or high < low:
            raise SimulationException("Session length range must satisfy 1 <= low <= high", {"range": [low, high]})
        if self.session_count < 0:
            raise SimulationException("Session count must be >= 0")
        if self.fixation_duration_mean_ms <= 0 or self.fixation_duration_sd_ms < 0:
            raise SimulationException("Fixation duration distribution must have positive mean and nonnegative sd")
        if not 0.0 <= self.reading_fraction <= 1.0:
            raise SimulationException("reading_fraction must lie in [0, 1]")
        if self.jitter_deg < 0:
            raise SimulationException("jitter_deg must be >= 0")

    @property
    def classes(self) -> list[str]:
        return list(self.salience)

    def transition_row(self, label: str) -> dict[str, float]:
        if label in self.transitions:
            return {target: float(self.transitions[label].get(target, 0.0)) for target in self.classes}
        total = sum(self.salience.values())
        return {target: self.salience[target] / total for target in self.classes}

    def with_overrides(self, **changes: Any) -> PlantedModel:
        payload = {**self.to_dict(), **changes}
        return PlantedModel.from_dict(payload)

    def to_dict(self) -> dict[str, Any]:
        return {
            "salience": dict(self.salience),
            "transitions": {label: dict(row) for label, row in self.transitions.items()},
            "fixation_duration_mean_ms": self.fixation_duration_mean_ms,
            "fixation_duration_sd_ms": self.fixation_duration_sd_ms,
            "session_count": self.session_count,
            "session_length_range": list(self.session_length_range),
            "reading_fraction": self.reading_fraction,
            "jitter_deg": self.jitter_deg,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> PlantedModel:
        if "salience" not in payload or not isinstance(payload["salience"], Mapping):
            raise SimulationException("Planted model requires a 'salience' object")
        length_range = payload.get("session_length_range", (40, 80))
        if len(length_range) != 2:
            raise SimulationException("session_length_range must be [low, high]")
        return cls(
            salience={str(label): float(value) for label, value in payload["salience"].items()},
            transitions={
                str(label): {str(target): float(p) for target, p in row.items()}
                for label, row in (payload.get("transitions") or {}).items()
            },
            fixation_duration_mean_ms=float(payload.get("fixation_duration_mean_ms", 220.0)),
            fixation_duration_sd_ms=float(payload.get("fixation_duration_sd_ms", 40.0)),
            session_count=int(payload.get("session_count", 10)),
            session_length_range=(int(length_range[0]), int(length_range[1])),
            reading_fraction=float(payload.get("reading_fraction", READING_FRACTION)),
            jitter_deg=float(payload.get("jitter_deg", 0.2)),
            seed=int(payload.get("seed", 42)),
        )
