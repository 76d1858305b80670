"""Synthetic gaze sessions drawn from a planted model, for parameter-recovery checks."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import structlog

from ..core.entities import Fixation, GazeSample, PathEntry, ScanPath, SessionGeometry, SessionMode, TokenMap
from ..core.planted_model import PlantedModel
from ..exceptions import SimulationException
from ..ports.gaze_reader import GazeReaderPort
from ..utils.artifact_loader import load_artifact_payload
from ..utils.helpers import derived_rng
from ..utils.storage import write_canonical_json

logger = structlog.get_logger()

# Transit samples swing this many dispersion windows off the saccade line.
TRANSIT_OFFSET = 1.5
JITTER_CLIP = 0.95 / 4


@dataclass
class SimulatedSession:
    """Gaze stream of one synthetic session with its ground truth."""

    session_id: str
    mode: SessionMode
    path: ScanPath
    fixations: list[Fixation] = field(default_factory=list)
    samples: list[GazeSample] = field(default_factory=list)

    def truth(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "mode": self.mode.value,
            "path": self.path.to_dict(),
            "fixations": [fixation.to_dict() for fixation in self.fixations],
        }


def _normalized(weights: dict[str, float]) -> dict[str, float] | None:
    total = sum(weights.values())
    if total <= 0:
        return None
    return {label: value / total for label, value in weights.items()}


class CorpusSimulationService:
    """Synthesises scan paths and gaze streams whose I-DT segmentation recovers the planted fixations."""

    def __init__(
        self,
        geometry: SessionGeometry,
        dispersion_deg: float = 1.0,
        min_fixation_ms: float = 100.0,
    ):
        if dispersion_deg <= 0 or min_fixation_ms <= 0:
            raise SimulationException("Dispersion and minimum fixation duration must be positive")
        self.geometry = geometry
        self.dispersion_deg = dispersion_deg
        self.min_fixation_ms = min_fixation_ms

    @staticmethod
    def load_model(path: str | Path) -> PlantedModel:
        payload = load_artifact_payload(path, artifact_name="planted model")
        if not isinstance(payload, dict):
            raise SimulationException("Planted model file must contain an object")
        return PlantedModel.from_dict(payload)

    def _visitable(self, model: PlantedModel, token_map: TokenMap) -> dict[str, list[int]]:
        if len(token_map) == 0:
            raise SimulationException("Cannot simulate gaze over an empty token map")
        positions = token_map.positions_by_class()
        visitable = {label: positions[label] for label in model.classes if positions.get(label)}
        if not visitable:
            raise SimulationException(
                "No planted class occurs in the token map",
                {"planted": model.classes, "taxonomy": list(token_map.taxonomy)},
            )
        return visitable

    def _draw_path(
        self,
        model: PlantedModel,
        visitable: dict[str, list[int]],
        rng: np.random.Generator,
        index: int,
    ) -> ScanPath:
        mode = SessionMode.READING if rng.random() < model.reading_fraction else SessionMode.WRITING
        low, high = model.session_length_range
        length = int(rng.integers(low, high + 1))
        labels = list(visitable)
        total = sum(model.salience[label] for label in labels)
        start = {label: model.salience[label] / total for label in labels}
        entries = []
        current: str | None = None
        for step in range(length):
            probs = start
            if current is not None:
                row = model.transition_row(current)
                probs = _normalized({label: row.get(label, 0.0) for label in labels}) or start
            current = labels[int(rng.choice(len(labels), p=[probs[label] for label in labels]))]
            token_id = int(visitable[current][int(rng.integers(len(visitable[current])))])
            entries.append(PathEntry(step, token_id))
        return ScanPath(session_mode=mode, entries=tuple(entries), session_id=f"session_{index:04d}_{mode.value}")

    def simulate_paths(self, model: PlantedModel, token_map: TokenMap) -> list[ScanPath]:
        """Ground-truth scan paths only; identical to the paths of :meth:`simulate_sessions`."""
        visitable = self._visitable(model, token_map)
        paths = []
        for index in range(model.session_count):
            rng = derived_rng(model.seed, index)
            paths.append(self._draw_path(model, visitable, rng, index))
        return paths

    def _fixation_samples(
        self,
        center: tuple[float, float],
        start_index: int,
        model: PlantedModel,
        rng: np.random.Generator,
    ) -> tuple[list[GazeSample], Fixation]:
        period = self.geometry.sample_period_ms
        duration = rng.normal(model.fixation_duration_mean_ms, model.fixation_duration_sd_ms)
        # at least one full period beyond the minimum duration
        count = max(int(math.floor(duration / period)) + 1, math.ceil(self.min_fixation_ms / period) + 2)
        clip = JITTER_CLIP * self.dispersion_deg * self.geometry.pixels_per_degree
        sd = model.jitter_deg * self.geometry.pixels_per_degree
        offsets = np.clip(rng.normal(0.0, sd, size=(count, 2)) if sd > 0 else np.zeros((count, 2)), -clip, clip)
        offsets -= offsets.mean(axis=0)
        xs = center[0] + offsets[:, 0]
        ys = center[1] + offsets[:, 1]
        samples = [
            GazeSample((start_index + i) * period, float(x), float(y)) for i, (x, y) in enumerate(zip(xs, ys))
        ]
        fixation = Fixation(
            start=samples[0].timestamp,
            duration=samples[-1].timestamp - samples[0].timestamp,
            centroid_x=float(np.mean(xs)),
            centroid_y=float(np.mean(ys)),
            sample_count=count,
            dispersion_px=float(np.ptp(xs) + np.ptp(ys)),
        )
        return samples, fixation

    def _transit_samples(
        self, origin: tuple[float, float], target: tuple[float, float], start_index: int
    ) -> list[GazeSample]:
        """Zig-zag samples from ``origin`` to ``target``.

        Consecutive samples, and each end sample against its neighbouring
        fixation, are further apart than the dispersion window.
        """
        ppd = self.geometry.pixels_per_degree
        swing = TRANSIT_OFFSET * self.dispersion_deg * ppd
        dx, dy = target[0] - origin[0], target[1] - origin[1]
        distance = math.hypot(dx, dy)
        count = max(2, math.ceil(distance / swing) - 1)
        if count % 2:
            count += 1
        first_sign = 1.0 if dy >= 0 else -1.0
        period = self.geometry.sample_period_ms
        samples = []
        for j in range(count):
            fraction = (j + 1) / (count + 1)
            sign = first_sign if j % 2 == 0 else -first_sign
            samples.append(
                GazeSample(
                    (start_index + j) * period,
                    origin[0] + fraction * dx,
                    origin[1] + fraction * dy + sign * swing,
                )
            )
        return samples

    def simulate_sessions(self, model: PlantedModel, token_map: TokenMap) -> list[SimulatedSession]:
        """Scan paths plus the gaze samples that produce them under I-DT."""
        visitable = self._visitable(model, token_map)
        sessions = []
        for index in range(model.session_count):
            rng = derived_rng(model.seed, index)
            path = self._draw_path(model, visitable, rng, index)
            mode = path.session_mode
            session_id = path.session_id or ""
            samples: list[GazeSample] = []
            fixations: list[Fixation] = []
            previous: tuple[float, float] | None = None
            for entry in path.entries:
                center = token_map.tokens[entry.token_id].bbox.center
                if previous is not None:
                    samples.extend(self._transit_samples(previous, center, len(samples)))
                fixation_samples, fixation = self._fixation_samples(center, len(samples), model, rng)
                samples.extend(fixation_samples)
                fixations.append(fixation)
                previous = center
            sessions.append(SimulatedSession(session_id, mode, path, fixations, samples))
            logger.debug("Simulated session", session=session_id, fixations=len(fixations), samples=len(samples))
        logger.info("Simulated gaze corpus", sessions=len(sessions), seed=model.seed)
        return sessions

    def write_sessions(
        self,
        sessions: Sequence[SimulatedSession],
        output_dir: str | Path,
        writer: GazeReaderPort | None = None,
    ) -> list[Path]:
        """One ``<session_id>.csv`` per session plus ``truth.json`` with the planted paths and fixations."""
        if writer is None:
            from ..adapters.csv_gaze_reader import CsvGazeReader

            writer = CsvGazeReader()
        directory = Path(output_dir)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for session in sessions:
            target = directory / f"{session.session_id}.csv"
            writer.write(target, session.samples)
            written.append(target)
        write_canonical_json(directory / "truth.json", {"sessions": [session.truth() for session in sessions]})
        return written
