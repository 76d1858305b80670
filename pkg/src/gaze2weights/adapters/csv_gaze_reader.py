"""CSV gaze stream adapter using pandas."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd
import structlog

from ..core.entities import GazeSample, Validity
from ..exceptions import GazeDataException
from ..ports.gaze_reader import GazeReaderPort

logger = structlog.get_logger()

GAZE_COLUMNS = ["timestamp_ms", "x_px", "y_px", "validity"]


class CsvGazeReader(GazeReaderPort):
    """Reads ``timestamp_ms,x_px,y_px,validity`` records, one session per file."""

    def read(self, path: str | Path) -> list[GazeSample]:
        path = Path(path)
        if not path.exists():
            raise GazeDataException(f"Gaze recording not found: {path}", {"path": str(path)})
        try:
            frame = pd.read_csv(path, dtype={"validity": str}, skipinitialspace=True)
        except pd.errors.EmptyDataError:
            return []
        except (pd.errors.ParserError, UnicodeDecodeError) as exc:
            raise GazeDataException(f"Cannot parse gaze recording {path}: {exc}", {"path": str(path)}) from exc

        missing = [column for column in GAZE_COLUMNS if column not in frame.columns]
        if missing:
            raise GazeDataException("Gaze recording is missing columns", {"path": str(path), "missing": missing})
        if frame.empty:
            return []

        validity = frame["validity"].fillna("").str.strip().str.lower()
        known = {flag.value for flag in Validity}
        unknown = sorted(set(validity) - known)
        if unknown:
            raise GazeDataException("Unknown validity flags", {"path": str(path), "flags": unknown})

        timestamps = pd.to_numeric(frame["timestamp_ms"], errors="coerce").to_numpy(dtype=np.float64)
        xs = pd.to_numeric(frame["x_px"], errors="coerce").to_numpy(dtype=np.float64)
        ys = pd.to_numeric(frame["y_px"], errors="coerce").to_numpy(dtype=np.float64)
        if not np.all(np.isfinite(timestamps)):
            raise GazeDataException("Timestamps must be finite numbers", {"path": str(path)})
        steps = np.diff(timestamps)
        if np.any(steps <= 0):
            row = int(np.argmax(steps <= 0)) + 1
            raise GazeDataException(
                "Timestamps must be strictly increasing", {"path": str(path), "row": row, "timestamp": timestamps[row]}
            )
        valid_rows = (validity == Validity.VALID.value).to_numpy()
        bad = valid_rows & ~(np.isfinite(xs) & np.isfinite(ys))
        if np.any(bad):
            raise GazeDataException(
                "Valid samples must have finite coordinates", {"path": str(path), "row": int(np.argmax(bad))}
            )

        samples = [
            GazeSample(float(t), float(x), float(y), Validity(flag))
            for t, x, y, flag in zip(timestamps, xs, ys, validity)
        ]
        logger.debug("Read gaze recording", path=str(path), samples=len(samples))
        return samples

    def write(self, path: str | Path, samples: list[GazeSample]) -> None:
        frame = pd.DataFrame(
            {
                "timestamp_ms": [sample.timestamp for sample in samples],
                "x_px": [sample.x for sample in samples],
                "y_px": [sample.y for sample in samples],
                "validity": [sample.validity.value for sample in samples],
            },
            columns=GAZE_COLUMNS,
        )
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format="%.6f", lineterminator="\n")
