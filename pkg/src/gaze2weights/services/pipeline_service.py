"""End-to-end distillation: gaze corpus to priors, tables, pseudo paths and weight vectors."""

from __future__ import annotations

from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import structlog

from ..config.settings import RunConfig
from ..core.artifacts import MaskConfig, PseudoExample, SaliencePriorSet, ShardMap
from ..core.entities import ScanPath, SessionGeometry, SessionMode, TokenMap
from ..exceptions import Gaze2WeightsException, PipelineStageException
from ..factories.tokenizer_factory import TokenizerFactory
from ..ports.shard_tokenizer import ShardTokenizerPort
from ..utils.artifact_loader import load_geometry
from ..utils.storage import file_digest, write_canonical_json
from .corpus_simulation_service import CorpusSimulationService
from .gaze_ingest_service import GazeIngestService
from .pseudo_attention_service import PseudoAttentionService
from .salience_service import SalienceService
from .token_alignment_service import TokenAlignmentService
from .transition_service import ModeTables, TransitionService
from .weight_projection_service import WeightProjectionService

logger = structlog.get_logger()

MINI_CORPUS_DIR = Path(__file__).resolve().parent.parent / "data" / "mini_corpus"

SCAN_PATHS_FILE = "scan_paths.json"
PRIORS_FILE = "priors.json"
TABLES_FILE = "tables.json"
PSEUDO_FILE = "pseudo.json"
SHARDS_FILE = "shards.json"
WEIGHTS_FILE = "weights.jsonl"
MANIFEST_FILE = "manifest.json"
ARTIFACT_FILES = (SCAN_PATHS_FILE, PRIORS_FILE, TABLES_FILE, PSEUDO_FILE, SHARDS_FILE, WEIGHTS_FILE)


@contextmanager
def pipeline_stage(stage: str, example_id: int | None = None) -> Iterator[None]:
    """Re-raise domain errors of ``stage`` as :class:`PipelineStageException`."""
    try:
        yield
    except PipelineStageException:
        raise
    except Gaze2WeightsException as exc:
        details = dict(exc.details)
        details.setdefault("cause", type(exc).__name__)
        if example_id is None:
            example_id = details.get("example_id")
        raise PipelineStageException(str(exc), stage, example_id, details) from exc


def session_mode_from_name(name: str, default: SessionMode = SessionMode.COMBINED) -> SessionMode:
    lowered = name.lower()
    if SessionMode.WRITING.value in lowered:
        return SessionMode.WRITING
    if SessionMode.READING.value in lowered:
        return SessionMode.READING
    return default


@dataclass
class ArtifactBundle:
    """Files of one run plus the in-memory artifacts they were written from."""

    output_dir: Path
    manifest: dict[str, Any]
    scan_paths: list[ScanPath] = field(default_factory=list)
    priors: SaliencePriorSet | None = None
    tables: ModeTables = field(default_factory=dict)
    pseudo: list[PseudoExample] = field(default_factory=list)
    shard_maps: dict[int, ShardMap] = field(default_factory=dict)

    def path(self, name: str) -> Path:
        return self.output_dir / name

    @property
    def total_bytes(self) -> int:
        return int(self.manifest["total_bytes"])


class PipelineService:
    """Runs every stage in order and writes a reproducible artifact bundle."""

    def __init__(self, config: RunConfig, tokenizer: ShardTokenizerPort | None = None):
        self.config = config
        if tokenizer is None:
            options: dict[str, Any] = {}
            if config.tokenizer == "tiktoken":
                options["encoding_name"] = config.tiktoken_encoding
            with pipeline_stage("weight_projection"):
                tokenizer = TokenizerFactory.create(config.tokenizer, **options)
        self.tokenizer = tokenizer
        self.ingest = GazeIngestService(
            dispersion_deg=config.dispersion_deg,
            min_duration_ms=config.min_fixation_ms,
            max_velocity_deg_s=config.max_velocity_deg_s,
        )
        self.alignment = TokenAlignmentService(
            cell_width=config.cell_width_px, cell_height=config.cell_height_px, taxonomy=config.taxonomy
        )
        self.salience = SalienceService(config.taxonomy)
        self.transitions = TransitionService(config.taxonomy, config.prune_threshold)
        self.pseudo_attention = PseudoAttentionService(config.ablation())
        self.projection = WeightProjectionService(self.tokenizer, config.w_base, config.ablation())

    @property
    def corpus_dir(self) -> Path:
        return Path(self.config.corpus_dir) if self.config.corpus_dir else MINI_CORPUS_DIR

    @property
    def examples_dir(self) -> Path:
        return Path(self.config.examples_dir) if self.config.examples_dir else self.corpus_dir / "examples"

    def load_stimulus(self) -> TokenMap:
        with pipeline_stage("token_align"):
            java = self.corpus_dir / "stimulus.java"
            if java.exists():
                return self.alignment.classify_file(java)
            return self.alignment.load_token_map(self.corpus_dir / "tokens.json")

    def collect_scan_paths(self, geometry: SessionGeometry, stimulus: TokenMap) -> list[ScanPath]:
        """Segment and align recorded sessions, or simulate them from ``model.json``."""
        sessions_dir = self.corpus_dir / "sessions"
        recordings = sorted(sessions_dir.glob("*.csv")) if sessions_dir.is_dir() else []
        streams = []
        if recordings:
            with pipeline_stage("gaze_ingest"):
                for recording in recordings:
                    mode = session_mode_from_name(recording.stem, self.config.mode)
                    streams.append((recording.stem, mode, self.ingest.read_samples(recording)))
        else:
            with pipeline_stage("corpus_sim"):
                simulator = CorpusSimulationService(geometry, self.config.dispersion_deg, self.config.min_fixation_ms)
                model = simulator.load_model(self.corpus_dir / "model.json")
                for session in simulator.simulate_sessions(model, stimulus):
                    streams.append((session.session_id, session.mode, session.samples))

        paths = []
        discarded = 0.0
        for session_id, mode, samples in streams:
            with pipeline_stage("gaze_ingest"):
                segmented = self.ingest.segment_session(samples, geometry, session_id)
            with pipeline_stage("token_align"):
                path, discard_ratio = self.alignment.align_fixations(segmented.fixations, stimulus, mode, session_id)
            discarded += discard_ratio
            paths.append(path)
        logger.info(
            "Collected scan paths",
            sessions=len(paths),
            entries=sum(len(path) for path in paths),
            mean_discard_ratio=round(discarded / len(paths), 4) if paths else 0.0,
        )
        return paths

    def load_examples(self) -> list[TokenMap]:
        sources = sorted(self.examples_dir.glob("*.java"))
        if not sources:
            raise PipelineStageException(
                f"No training snippets found in {self.examples_dir}",
                "token_align",
                details={"dir": str(self.examples_dir)},
            )
        token_maps = []
        for example_id, source in enumerate(sources):
            with pipeline_stage("token_align", example_id):
                token_maps.append(self.alignment.classify_file(source))
        return token_maps

    def run(self) -> ArtifactBundle:
        """Run every stage and write the bundle into ``config.output_dir``."""
        config = self.config
        output_dir = Path(config.output_dir)
        logger.info("Starting pipeline", mode=config.mode.value, seed=config.seed, corpus=str(self.corpus_dir))

        with pipeline_stage("gaze_ingest"):
            geometry = load_geometry(self.corpus_dir / "geometry.json")
        stimulus = self.load_stimulus()
        scan_paths = self.collect_scan_paths(geometry, stimulus)

        with pipeline_stage("salience_model"):
            priors = self.salience.fit_prior_set(scan_paths, stimulus)
        with pipeline_stage("transition_model"):
            tables = self.transitions.fit_modes(scan_paths, stimulus)

        token_maps = self.load_examples()
        mask_config = MaskConfig(config.mode, config.line_span(config.mode), config.seed)
        mode_tables, index = tables[config.mode]
        pseudo = []
        for example_id, token_map in enumerate(token_maps):
            with pipeline_stage("pseudo_attention", example_id):
                pseudo.append(
                    self.pseudo_attention.generate_example(
                        token_map, priors, mode_tables, index, mask_config, example_id
                    )
                )

        shard_maps = {}
        for example_id, token_map in enumerate(token_maps):
            with pipeline_stage("weight_projection", example_id):
                shard_maps[example_id] = self.projection.shard_map(token_map, example_id)
        with pipeline_stage("weight_projection"):
            vectors = self.projection.project_examples(
                pseudo, priors, shard_maps, config.mode, dict(enumerate(token_maps))
            )

        with pipeline_stage("manifest"):
            write_canonical_json(output_dir / SCAN_PATHS_FILE, {"paths": [path.to_dict() for path in scan_paths]})
            self.salience.save(priors, output_dir / PRIORS_FILE)
            self.transitions.save(tables, output_dir / TABLES_FILE)
            self.pseudo_attention.save(pseudo, mask_config, output_dir / PSEUDO_FILE)
            self.projection.save_shards(shard_maps, output_dir / SHARDS_FILE)
            self.projection.save_weights(vectors, output_dir / WEIGHTS_FILE)
            manifest = self.write_manifest(output_dir)

        logger.info("Pipeline finished", output_dir=str(output_dir), total_bytes=manifest["total_bytes"])
        return ArtifactBundle(
            output_dir=output_dir,
            manifest=manifest,
            scan_paths=scan_paths,
            priors=priors,
            tables=tables,
            pseudo=pseudo,
            shard_maps=shard_maps,
        )

    def write_manifest(self, output_dir: Path) -> dict[str, Any]:
        """Hash every artifact file; the manifest holds no timestamps."""
        files = {name: file_digest(output_dir / name) for name in ARTIFACT_FILES}
        manifest = {
            "config": self.config.hashed_payload(),
            "config_hash": self.config.config_hash(),
            "seed": self.config.seed,
            "files": files,
            "total_bytes": sum(entry["bytes"] for entry in files.values()),
        }
        write_canonical_json(output_dir / MANIFEST_FILE, manifest)
        return manifest
