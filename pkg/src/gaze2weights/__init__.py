"""gaze2weights - Distill developer eye-tracking data into token weights for code-model training."""

from typing import Any, Optional

from .adapters.csv_gaze_reader import CsvGazeReader
from .adapters.demo_tokenizer import DemoTokenizer
from .adapters.java_subset_classifier import JavaSubsetClassifier
from .adapters.shard_file_tokenizer import ShardFileTokenizer
from .config.settings import RunConfig, settings
from .core.artifacts import (
    AblationConfig,
    AttentionMask,
    BetaPrior,
    MaskConfig,
    MonogramCounts,
    NGramIndex,
    PseudoExample,
    PseudoGram,
    PseudoPath,
    SaliencePriorSet,
    ShardMap,
    TransitionTables,
    WeightVector,
)
from .core.entities import (
    AstToken,
    BoundingBox,
    Fixation,
    GazeSample,
    PathEntry,
    Saccade,
    ScanPath,
    SegmentedSession,
    SessionGeometry,
    SessionMode,
    TokenMap,
    Validity,
)
from .core.planted_model import PlantedModel
from .core.taxonomy import DEFAULT_TAXONOMY
from .core.training import (
    AttentionRow,
    CriticalSet,
    DpoConfig,
    LossInput,
    LossReport,
    MetricsReport,
    PreferencePair,
)
from .exceptions import *
from .factories import TokenizerFactory
from .ports.gaze_reader import GazeReaderPort
from .ports.shard_tokenizer import ShardTokenizerPort
from .ports.source_classifier import SourceClassifierPort
from .services.artifact_validation_service import ArtifactValidationService, ValidationReport
from .services.attention_metrics_service import AttentionMetricsService
from .services.corpus_simulation_service import CorpusSimulationService
from .services.gaze_ingest_service import GazeIngestService
from .services.loss_engine import LossEngine
from .services.pipeline_service import ArtifactBundle, PipelineService
from .services.pseudo_attention_service import PseudoAttentionService
from .services.salience_service import SalienceService
from .services.token_alignment_service import TokenAlignmentService
from .services.transition_service import TransitionService
from .services.weight_projection_service import WeightProjectionService

__version__ = "0.1.0"

__all__ = [
    # Pipeline
    "run_pipeline",
    "validate_bundle",
    "PipelineService",
    "ArtifactBundle",
    "ArtifactValidationService",
    "ValidationReport",
    "RunConfig",
    "settings",
    # Services
    "GazeIngestService",
    "TokenAlignmentService",
    "SalienceService",
    "TransitionService",
    "PseudoAttentionService",
    "WeightProjectionService",
    "LossEngine",
    "AttentionMetricsService",
    "CorpusSimulationService",
    # Adapters and ports
    "CsvGazeReader",
    "JavaSubsetClassifier",
    "DemoTokenizer",
    "ShardFileTokenizer",
    "TokenizerFactory",
    "GazeReaderPort",
    "SourceClassifierPort",
    "ShardTokenizerPort",
    # Entities
    "SessionMode",
    "Validity",
    "GazeSample",
    "SessionGeometry",
    "Fixation",
    "Saccade",
    "SegmentedSession",
    "BoundingBox",
    "AstToken",
    "TokenMap",
    "PathEntry",
    "ScanPath",
    "DEFAULT_TAXONOMY",
    # Artifacts
    "MonogramCounts",
    "BetaPrior",
    "SaliencePriorSet",
    "TransitionTables",
    "NGramIndex",
    "MaskConfig",
    "AblationConfig",
    "AttentionMask",
    "PseudoGram",
    "PseudoPath",
    "PseudoExample",
    "ShardMap",
    "WeightVector",
    "PlantedModel",
    # Objectives and metrics
    "LossInput",
    "PreferencePair",
    "DpoConfig",
    "LossReport",
    "AttentionRow",
    "CriticalSet",
    "MetricsReport",
    # Exceptions
    "Gaze2WeightsException",
    "GazeDataException",
    "TokenMapException",
    "SourceParseException",
    "SalienceException",
    "TransitionException",
    "SamplingException",
    "ProjectionException",
    "LossException",
    "MetricsException",
    "SimulationException",
    "ConfigurationException",
    "ArtifactException",
    "PipelineStageException",
]


def run_pipeline(config: Optional[RunConfig] = None, **overrides: Any) -> ArtifactBundle:
    """
    Run the full distillation pipeline and write the artifact bundle.

    Args:
        config: Complete run configuration; built from ``settings`` when omitted
        **overrides: RunConfig fields applied on top of the settings defaults

    Returns:
        ArtifactBundle with the manifest and in-memory artifacts

    Example:
        >>> bundle = run_pipeline(seed=42, output_dir="bundle")
        >>> bundle.total_bytes < 1_048_576
        True
    """
    if config is None:
        config = settings.build_run_config(overrides)
    elif overrides:
        config = config.model_copy(update=overrides)
    return PipelineService(config).run()


def validate_bundle(bundle_dir: Any) -> ValidationReport:
    """Re-check every invariant of a bundle directory; failures are report entries."""
    return ArtifactValidationService(bundle_dir).validate()
