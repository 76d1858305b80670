"""Gaze Reader Port - Interface for loading recorded gaze sample streams."""

from __future__ import annotations

from abc import ABC, abstractmethod
from pathlib import Path

from ..core.entities import GazeSample


class GazeReaderPort(ABC):
    """Abstract interface for reading one session's raw gaze samples."""

    @abstractmethod
    def read(self, path: str | Path) -> list[GazeSample]:
        """Read a single-session recording.

        Args:
            path: Location of the recording.

        Returns:
            Samples in timestamp order.

        Raises:
            GazeDataException: If the recording is malformed.
        """
        pass

    @abstractmethod
    def write(self, path: str | Path, samples: list[GazeSample]) -> None:
        """Persist samples in the reader's own format."""
        pass
