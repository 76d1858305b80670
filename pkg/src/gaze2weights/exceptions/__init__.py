"""Custom exceptions for gaze2weights."""

from typing import Any, Dict, Optional


class Gaze2WeightsException(Exception):
    """Base exception for gaze2weights."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details = details or {}


class GazeDataException(Gaze2WeightsException):
    """Exception related to raw gaze streams and session geometry."""

    pass


class TokenMapException(Gaze2WeightsException):
    """Exception when a token map violates its invariants."""

    pass


class SourceParseException(TokenMapException):
    """Exception when a source snippet cannot be classified."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})", {"line": line, "column": column})
        self.line = line
        self.column = column


class SalienceException(Gaze2WeightsException):
    """Exception related to Beta salience priors."""

    pass


class TransitionException(Gaze2WeightsException):
    """Exception related to n-gram transition tables."""

    pass


class SamplingException(Gaze2WeightsException):
    """Exception during pseudo-attention sampling."""

    pass


class ProjectionException(Gaze2WeightsException):
    """Exception during weight assembly or shard projection."""

    pass


class LossException(Gaze2WeightsException):
    """Exception during loss evaluation."""

    pass


class MetricsException(Gaze2WeightsException):
    """Exception during attention metric computation."""

    pass


class SimulationException(Gaze2WeightsException):
    """Exception during synthetic corpus generation."""

    pass


class ConfigurationException(Gaze2WeightsException):
    """Exception related to configuration."""

    pass


class ArtifactException(Gaze2WeightsException):
    """Exception when an artifact file is missing or malformed."""

    pass


class PipelineStageException(Gaze2WeightsException):
    """Exception raised when a pipeline stage aborts."""

    def __init__(
        self,
        message: str,
        stage: str,
        example_id: Optional[int] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        details = {**(details or {}), "stage": stage}
        if example_id is not None:
            details["example_id"] = example_id
        prefix = f"[{stage}]" if example_id is None else f"[{stage} example={example_id}]"
        super().__init__(f"{prefix} {message}", details)
        self.stage = stage
        self.example_id = example_id
