"""Integration tests for the full pipeline and bundle validation."""

import json
import shutil
from pathlib import Path

import pytest

from gaze2weights import run_pipeline, validate_bundle
from gaze2weights.adapters.java_subset_classifier import JavaSubsetClassifier
from gaze2weights.core.entities import SessionMode
from gaze2weights.exceptions import PipelineStageException, SalienceException
from gaze2weights.services.artifact_validation_service import ArtifactValidationService
from gaze2weights.services.corpus_simulation_service import CorpusSimulationService
from gaze2weights.services.pipeline_service import (
    ARTIFACT_FILES,
    MANIFEST_FILE,
    MINI_CORPUS_DIR,
    TABLES_FILE,
    WEIGHTS_FILE,
    pipeline_stage,
    session_mode_from_name,
)
from gaze2weights.utils.artifact_loader import load_geometry

pytestmark = pytest.mark.integration


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    return run_pipeline(output_dir=tmp_path_factory.mktemp("bundle"), seed=42)


def copy_bundle(bundle, target: Path) -> Path:
    shutil.copytree(bundle.output_dir, target)
    return target


class TestRunPipeline:
    """Full runs over the bundled mini corpus."""

    def test_bundle_files_are_written(self, bundle):
        for name in (*ARTIFACT_FILES, MANIFEST_FILE):
            assert bundle.path(name).is_file()
        assert set(bundle.manifest["files"]) == set(ARTIFACT_FILES)
        assert bundle.manifest["seed"] == 42
        assert "output_dir" not in bundle.manifest["config"]

    def test_bundle_stays_under_one_mebibyte(self, bundle):
        assert 0 < bundle.total_bytes < 1_048_576

    def test_every_example_gets_a_weight_vector(self, bundle):
        assert len(bundle.pseudo) == len(list((MINI_CORPUS_DIR / "examples").glob("*.java")))
        assert set(bundle.shard_maps) == {example.example_id for example in bundle.pseudo}
        assert len(bundle.scan_paths) == 12

    def test_runs_are_byte_identical(self, bundle, tmp_path: Path):
        again = run_pipeline(output_dir=tmp_path / "again", seed=42)

        for name in (*ARTIFACT_FILES, MANIFEST_FILE):
            assert again.path(name).read_bytes() == bundle.path(name).read_bytes()

    def test_seed_changes_pseudo_attention(self, bundle, tmp_path: Path):
        other = run_pipeline(output_dir=tmp_path / "other", seed=7)

        assert other.manifest["config_hash"] != bundle.manifest["config_hash"]
        assert other.path("pseudo.json").read_bytes() != bundle.path("pseudo.json").read_bytes()

    def test_without_bonuses_every_weight_is_base(self, tmp_path: Path):
        ablated = run_pipeline(output_dir=tmp_path / "ablated", use_salience=False, use_rarity=False)

        for line in ablated.path(WEIGHTS_FILE).read_text().splitlines():
            assert set(json.loads(line)["weights"]) == {3.0}
        assert validate_bundle(ablated.output_dir).passed

    def test_recorded_sessions_are_segmented_and_aligned(self, tmp_path: Path):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        for name in ("geometry.json", "stimulus.java"):
            shutil.copy(MINI_CORPUS_DIR / name, corpus / name)
        stimulus = JavaSubsetClassifier().classify((corpus / "stimulus.java").read_text())
        simulator = CorpusSimulationService(load_geometry(corpus / "geometry.json"))
        model = simulator.load_model(MINI_CORPUS_DIR / "model.json").with_overrides(session_count=3)
        sessions = simulator.simulate_sessions(model, stimulus)
        simulator.write_sessions(sessions, corpus / "sessions")

        result = run_pipeline(
            output_dir=tmp_path / "out", corpus_dir=corpus, examples_dir=MINI_CORPUS_DIR / "examples"
        )

        assert [path.token_ids() for path in result.scan_paths] == [s.path.token_ids() for s in sessions]
        assert [path.session_mode for path in result.scan_paths] == [s.mode for s in sessions]

    def test_missing_examples_fail_in_token_align(self, tmp_path: Path):
        empty = tmp_path / "empty"
        empty.mkdir()

        with pytest.raises(PipelineStageException) as excinfo:
            run_pipeline(output_dir=tmp_path / "out", examples_dir=empty)
        assert excinfo.value.details["stage"] == "token_align"


class TestValidateBundle:
    """Invariant re-checks over written bundles."""

    def test_fresh_bundle_passes_every_check(self, bundle):
        report = validate_bundle(bundle.output_dir)

        assert report.passed, [check.to_dict() for check in report.failures()]
        assert [check.name for check in report.checks] == [name for name, _ in ArtifactValidationService.CHECKS]

    def test_low_count_fails_pruning(self, bundle, tmp_path: Path):
        target = copy_bundle(bundle, tmp_path / "tampered")
        tables = json.loads((target / TABLES_FILE).read_text())
        mode = next(name for name, entry in tables.items() if entry["c2"])
        first = sorted(tables[mode]["c2"])[0]
        tables[mode]["c2"][first] = 4
        (target / TABLES_FILE).write_text(json.dumps(tables))

        report = validate_bundle(target)

        assert not report.get("pruning").passed
        assert "below 5" in report.get("pruning").detail
        assert not report.get("manifest").passed

    def test_truncated_weights_fail_length_law(self, bundle, tmp_path: Path):
        target = copy_bundle(bundle, tmp_path / "truncated")
        lines = (target / WEIGHTS_FILE).read_text().splitlines()
        record = json.loads(lines[0])
        record["weights"] = record["weights"][:-1]
        lines[0] = json.dumps(record)
        (target / WEIGHTS_FILE).write_text("\n".join(lines) + "\n")

        report = validate_bundle(target)

        assert not report.get("length_law").passed
        assert report.get("priors").passed

    def test_weight_below_base_fails_floor(self, bundle, tmp_path: Path):
        target = copy_bundle(bundle, tmp_path / "floor")
        lines = (target / WEIGHTS_FILE).read_text().splitlines()
        record = json.loads(lines[0])
        record["weights"] = [1.0] * len(record["weights"])
        lines[0] = json.dumps(record)
        (target / WEIGHTS_FILE).write_text("\n".join(lines) + "\n")

        assert not validate_bundle(target).get("base_floor").passed

    def test_missing_file_is_reported_not_raised(self, bundle, tmp_path: Path):
        target = copy_bundle(bundle, tmp_path / "partial")
        (target / TABLES_FILE).unlink()

        report = validate_bundle(target)

        assert not report.get("pruning").passed
        assert "not found" in report.get("pruning").detail


class TestPipelineHelpers:
    """Stage wrapping and session naming."""

    def test_stage_errors_carry_the_stage(self):
        with pytest.raises(PipelineStageException) as excinfo:
            with pipeline_stage("salience_model", example_id=2):
                raise SalienceException("bad counts", {"c1": -1})

        assert str(excinfo.value).startswith("[salience_model example=2]")
        assert excinfo.value.details["cause"] == "SalienceException"
        assert excinfo.value.details["c1"] == -1

    @pytest.mark.parametrize(
        "name,mode",
        [
            ("session_0003_reading", SessionMode.READING),
            ("P12_Writing_task", SessionMode.WRITING),
            ("anonymous", SessionMode.COMBINED),
        ],
    )
    def test_session_mode_from_name(self, name, mode):
        assert session_mode_from_name(name) == mode
