"""Gaze preprocessing: artifact filtering, I-DT fixation segmentation and saccade derivation."""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

import numpy as np
import structlog

from ..core.entities import Fixation, GazeSample, Saccade, SegmentedSession, SessionGeometry
from ..exceptions import GazeDataException
from ..ports.gaze_reader import GazeReaderPort
from ..utils.artifact_loader import load_geometry

logger = structlog.get_logger()

DEFAULT_MAX_VELOCITY_DEG_S = 1000.0
DEFAULT_DISPERSION_DEG = 1.0
DEFAULT_MIN_DURATION_MS = 100.0


def _check_increasing(samples: Sequence[GazeSample]) -> None:
    for previous, current in zip(samples, samples[1:]):
        if current.timestamp <= previous.timestamp:
            raise GazeDataException(
                "Timestamps must be strictly increasing",
                {"previous": previous.timestamp, "current": current.timestamp},
            )


def sample_velocities(samples: Sequence[GazeSample], geometry: SessionGeometry) -> np.ndarray:
    """Angular speed in deg/s of every sample: the smaller of its incoming and outgoing speeds.

    Endpoints use their single neighbour; a lone sample has speed 0.
    """
    count = len(samples)
    if count < 2:
        return np.zeros(count)
    ts = np.array([sample.timestamp for sample in samples], dtype=np.float64)
    xs = np.array([sample.x for sample in samples], dtype=np.float64)
    ys = np.array([sample.y for sample in samples], dtype=np.float64)
    degrees = np.hypot(np.diff(xs), np.diff(ys)) / geometry.pixels_per_degree
    speeds = degrees / (np.diff(ts) / 1000.0)
    velocities = np.empty(count)
    velocities[0] = speeds[0]
    velocities[-1] = speeds[-1]
    velocities[1:-1] = np.minimum(speeds[:-1], speeds[1:])
    return velocities


def filter_artifacts(
    samples: Sequence[GazeSample],
    geometry: SessionGeometry | None = None,
    max_velocity_deg_s: float = DEFAULT_MAX_VELOCITY_DEG_S,
) -> list[GazeSample]:
    """Drop blink/offscreen samples and, when geometry is known, velocity outliers."""
    _check_increasing(samples)
    valid = [sample for sample in samples if sample.is_valid]
    if geometry is None or len(valid) < 2:
        return valid
    velocities = sample_velocities(valid, geometry)
    return [sample for sample, velocity in zip(valid, velocities) if velocity <= max_velocity_deg_s]


def segment_fixations(
    samples: Sequence[GazeSample],
    geometry: SessionGeometry,
    dispersion_deg: float = DEFAULT_DISPERSION_DEG,
    min_duration_ms: float = DEFAULT_MIN_DURATION_MS,
) -> list[Fixation]:
    """Dispersion-threshold (I-DT) fixation detection.

    A window grows while ``(max x - min x) + (max y - min y)`` stays within
    ``dispersion_deg * pixels_per_degree``. The sample that breaks the bound
    closes the window and starts the next one. Windows spanning at least
    ``min_duration_ms`` become fixations.
    """
    if dispersion_deg <= 0 or min_duration_ms <= 0:
        raise GazeDataException(
            "Dispersion and minimum duration must be positive",
            {"dispersion_deg": dispersion_deg, "min_duration_ms": min_duration_ms},
        )
    threshold = dispersion_deg * geometry.pixels_per_degree
    fixations: list[Fixation] = []
    count = len(samples)
    start = 0
    while start < count:
        first = samples[start]
        min_x = max_x = first.x
        min_y = max_y = first.y
        end = start
        while end + 1 < count:
            candidate = samples[end + 1]
            spread = (max(max_x, candidate.x) - min(min_x, candidate.x)) + (
                max(max_y, candidate.y) - min(min_y, candidate.y)
            )
            if spread > threshold:
                break
            min_x, max_x = min(min_x, candidate.x), max(max_x, candidate.x)
            min_y, max_y = min(min_y, candidate.y), max(max_y, candidate.y)
            end += 1
        duration = samples[end].timestamp - first.timestamp
        if duration >= min_duration_ms:
            members = samples[start : end + 1]
            fixations.append(
                Fixation(
                    start=first.timestamp,
                    duration=duration,
                    centroid_x=float(np.mean([sample.x for sample in members])),
                    centroid_y=float(np.mean([sample.y for sample in members])),
                    sample_count=len(members),
                    dispersion_px=(max_x - min_x) + (max_y - min_y),
                )
            )
        start = end + 1
    return fixations


def derive_saccades(fixations: Sequence[Fixation]) -> list[Saccade]:
    """One saccade between each pair of consecutive fixations."""
    saccades = []
    for index, (previous, current) in enumerate(zip(fixations, fixations[1:])):
        saccades.append(
            Saccade(
                from_fixation=index,
                to_fixation=index + 1,
                duration=current.start - previous.end,
                amplitude_px=float(
                    np.hypot(current.centroid_x - previous.centroid_x, current.centroid_y - previous.centroid_y)
                ),
            )
        )
    return saccades


class GazeIngestService:
    """Turns raw gaze recordings into fixations and saccades."""

    def __init__(
        self,
        reader: GazeReaderPort | None = None,
        dispersion_deg: float = DEFAULT_DISPERSION_DEG,
        min_duration_ms: float = DEFAULT_MIN_DURATION_MS,
        max_velocity_deg_s: float = DEFAULT_MAX_VELOCITY_DEG_S,
    ):
        if reader is None:
            from ..adapters.csv_gaze_reader import CsvGazeReader

            reader = CsvGazeReader()
        self.reader = reader
        self.dispersion_deg = dispersion_deg
        self.min_duration_ms = min_duration_ms
        self.max_velocity_deg_s = max_velocity_deg_s

    def read_samples(self, path: str | Path) -> list[GazeSample]:
        return self.reader.read(path)

    def load_geometry(self, path: str | Path) -> SessionGeometry:
        return load_geometry(path)

    def filter_artifacts(
        self, samples: Sequence[GazeSample], geometry: SessionGeometry | None = None
    ) -> list[GazeSample]:
        return filter_artifacts(samples, geometry, self.max_velocity_deg_s)

    def segment_fixations(self, samples: Sequence[GazeSample], geometry: SessionGeometry) -> list[Fixation]:
        return segment_fixations(samples, geometry, self.dispersion_deg, self.min_duration_ms)

    def derive_saccades(self, fixations: Sequence[Fixation]) -> list[Saccade]:
        return derive_saccades(fixations)

    def segment_session(
        self, samples: Sequence[GazeSample], geometry: SessionGeometry, session_id: str | None = None
    ) -> SegmentedSession:
        """Filter, segment and derive saccades for one session."""
        cleaned = self.filter_artifacts(samples, geometry)
        fixations = self.segment_fixations(cleaned, geometry)
        saccades = self.derive_saccades(fixations)
        logger.debug(
            "Segmented session",
            session=session_id,
            samples=len(samples),
            dropped=len(samples) - len(cleaned),
            fixations=len(fixations),
        )
        return SegmentedSession(
            fixations=fixations,
            saccades=saccades,
            kept_samples=len(cleaned),
            dropped_samples=len(samples) - len(cleaned),
        )

    def segment_file(self, path: str | Path, geometry: SessionGeometry) -> SegmentedSession:
        return self.segment_session(self.read_samples(path), geometry, session_id=Path(path).stem)
