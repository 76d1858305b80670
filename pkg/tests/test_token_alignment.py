"""Tests for the Java-subset classifier, token map loading and fixation alignment."""

import json
from pathlib import Path

import pytest

from gaze2weights.adapters.java_subset_classifier import JavaSubsetClassifier
from gaze2weights.core.entities import Fixation, SessionMode
from gaze2weights.core.taxonomy import (
    ARGUMENT,
    CONDITIONAL_STATEMENT,
    FUNCTION_CALL,
    FUNCTION_DECLARATION,
    LOOP,
    OTHER,
    PARAMETER,
    VARIABLE_DECLARATION,
)
from gaze2weights.exceptions import SourceParseException, TokenMapException
from gaze2weights.services.token_alignment_service import TokenAlignmentService, align_fixations, find_overlaps


def fixation_at(x: float, y: float, start: float = 0.0) -> Fixation:
    return Fixation(start=start, duration=200.0, centroid_x=x, centroid_y=y, sample_count=24)


def classes_by_text(token_map, text):
    return [token.semantic_class for token in token_map.tokens if token.text == text]


class TestJavaSubsetClassifier:
    """Semantic classes of leaf tokens."""

    def test_declaration_header(self, java_snippet):
        token_map = JavaSubsetClassifier().classify(java_snippet)

        header = [token.semantic_class for token in token_map.tokens[:4]]
        assert header == [FUNCTION_DECLARATION] * 4
        assert [token.text for token in token_map.tokens[:4]] == ["public", "static", "int", "sumPositive"]

    def test_parameters_and_arguments(self, java_snippet):
        token_map = JavaSubsetClassifier().classify(java_snippet)

        assert classes_by_text(token_map, "values")[0] == PARAMETER
        assert classes_by_text(token_map, "add") == [FUNCTION_CALL]
        assert classes_by_text(token_map, "total")[:2] == [VARIABLE_DECLARATION, OTHER]
        assert ARGUMENT in classes_by_text(token_map, "total")

    def test_control_constructs(self, java_snippet):
        token_map = JavaSubsetClassifier().classify(java_snippet)

        assert classes_by_text(token_map, "for") == [LOOP]
        assert classes_by_text(token_map, "if") == [CONDITIONAL_STATEMENT]
        assert classes_by_text(token_map, "length") == [LOOP]
        assert classes_by_text(token_map, "return") == [OTHER]

    def test_every_class_of_the_taxonomy_occurs(self, java_snippet):
        token_map = JavaSubsetClassifier().classify(java_snippet)

        assert all(count > 0 for count in token_map.class_counts().values())

    def test_boxes_follow_the_character_grid(self, java_snippet):
        token_map = JavaSubsetClassifier().classify(java_snippet, cell_width=8.0, cell_height=16.0)

        first = token_map.tokens[0]
        assert first.bbox.to_list() == [0.0, 0.0, 48.0, 16.0]
        second_line = [token for token in token_map.tokens if token.line == 2]
        assert second_line[0].text == "int"
        assert second_line[0].bbox.to_list() == [32.0, 16.0, 56.0, 32.0]
        assert find_overlaps(token_map) == []

    def test_comments_and_whitespace_are_skipped(self):
        token_map = JavaSubsetClassifier().classify("int a = 1; // trailing\n/* block\n comment */ a++;")

        assert [token.text for token in token_map.tokens] == ["int", "a", "=", "1", ";", "a", "++", ";"]
        assert token_map.tokens[-1].line == 3

    def test_string_literal_is_one_token(self):
        token_map = JavaSubsetClassifier().classify('log("a b");')

        assert [token.text for token in token_map.tokens] == ["log", "(", '"a b"', ")", ";"]
        assert classes_by_text(token_map, '"a b"') == [ARGUMENT]

    def test_statement_snippets(self):
        declaration = JavaSubsetClassifier().classify("int x = 5;")
        loop = JavaSubsetClassifier().classify("while (i < n) {\n    i++;\n}")

        assert classes_by_text(declaration, "x") == [VARIABLE_DECLARATION]
        assert classes_by_text(loop, "while") == [LOOP]
        assert classes_by_text(loop, "n") == [LOOP]

    def test_empty_source_gives_empty_map(self):
        assert len(JavaSubsetClassifier().classify("")) == 0

    def test_generic_types_take_their_declaration_class(self):
        source = (
            "List<Integer> filterEvens(List<Integer> xs) {\n"
            "    List<Integer> out = new ArrayList<>();\n"
            "    double d = (double) out.size() / 2;\n"
            "    out.add(1);\n"
            "    return out;\n"
            "}\n"
        )
        token_map = JavaSubsetClassifier().classify(source)

        assert classes_by_text(token_map, "<") == [FUNCTION_DECLARATION, PARAMETER, VARIABLE_DECLARATION, FUNCTION_CALL]
        assert classes_by_text(token_map, "ArrayList") == [FUNCTION_CALL]
        assert classes_by_text(token_map, "new") == [FUNCTION_CALL]
        assert classes_by_text(token_map, "add") == [FUNCTION_CALL]
        assert classes_by_text(token_map, "size") == [FUNCTION_CALL]
        assert classes_by_text(token_map, "double") == [VARIABLE_DECLARATION, OTHER]

    def test_unbalanced_braces_raise(self):
        with pytest.raises(SourceParseException) as excinfo:
            JavaSubsetClassifier().classify("void f() {\n int a = 0;\n")
        assert excinfo.value.line >= 1
        with pytest.raises(SourceParseException, match="line 1"):
            JavaSubsetClassifier().classify("int a = 0; }")

    def test_unterminated_string_reports_position(self):
        with pytest.raises(SourceParseException) as excinfo:
            JavaSubsetClassifier().classify('String s = "open;\n')
        assert excinfo.value.details["line"] == 1
        assert excinfo.value.details["column"] >= 1


class TestAlignFixations:
    """Fixation-to-token mapping."""

    def test_centroids_map_to_containing_boxes(self, small_token_map):
        fixations = [fixation_at(15.0, 10.0), fixation_at(135.0, 30.0), fixation_at(15.0, 10.0, start=400.0)]

        path, discard_ratio = align_fixations(fixations, small_token_map, SessionMode.READING, "s0")

        assert path.token_ids() == [0, 3, 0]
        assert [entry.fixation_index for entry in path.entries] == [0, 1, 2]
        assert discard_ratio == 0.0
        assert path.session_id == "s0"

    def test_fixations_between_tokens_are_discarded(self, small_token_map):
        fixations = [fixation_at(35.0, 10.0), fixation_at(55.0, 10.0), fixation_at(1000.0, 1000.0)]

        path, discard_ratio = align_fixations(fixations, small_token_map, SessionMode.WRITING)

        assert path.token_ids() == [1]
        assert path.entries[0].fixation_index == 1
        assert discard_ratio == pytest.approx(2 / 3)

    def test_box_edges_are_half_open(self, small_token_map):
        fixations = [fixation_at(40.0, 0.0), fixation_at(30.0, 0.0)]

        path, _ = align_fixations(fixations, small_token_map, SessionMode.READING)

        assert path.token_ids() == [1]

    def test_no_fixations_gives_empty_path(self, small_token_map):
        path, discard_ratio = align_fixations([], small_token_map, SessionMode.READING)

        assert len(path) == 0
        assert discard_ratio == 0.0


class TestTokenAlignmentService:
    """Token map files and validation."""

    def test_load_token_map_round_trip(self, tmp_path: Path, small_token_map):
        service = TokenAlignmentService()
        target = tmp_path / "tokens.json"
        service.save_token_map(small_token_map, target)

        loaded = service.load_token_map(target)

        assert loaded == small_token_map

    def test_overlapping_boxes_are_rejected(self, tmp_path: Path):
        payload = {
            "tokens": [
                {"id": 0, "text": "a", "class": "other", "line": 1, "bbox": [0, 0, 20, 16]},
                {"id": 1, "text": "b", "class": "other", "line": 1, "bbox": [10, 0, 30, 16]},
            ]
        }
        target = tmp_path / "tokens.json"
        target.write_text(json.dumps(payload))

        with pytest.raises(TokenMapException, match="overlap"):
            TokenAlignmentService().load_token_map(target)

    def test_unknown_class_is_rejected(self, tmp_path: Path):
        payload = {
            "taxonomy": ["other"],
            "tokens": [{"id": 0, "text": "a", "class": "loop", "line": 1, "bbox": [0, 0, 8, 16]}],
        }
        target = tmp_path / "tokens.json"
        target.write_text(json.dumps(payload))

        with pytest.raises(TokenMapException, match="Unknown class"):
            TokenAlignmentService().load_token_map(target)

    def test_load_stimulus_accepts_java_sources(self, tmp_path: Path, java_snippet):
        source = tmp_path / "snippet.java"
        source.write_text(java_snippet)

        token_map = TokenAlignmentService().load_stimulus(source)

        assert token_map.tokens[3].text == "sumPositive"

    def test_scan_path_file_round_trip(self, tmp_path: Path, scan_paths):
        service = TokenAlignmentService()
        for path in scan_paths:
            service.save_scan_path(path, tmp_path / f"{path.session_id}.json")

        loaded = service.load_scan_paths(tmp_path)

        assert loaded == scan_paths

    def test_load_single_scan_path(self, tmp_path: Path, scan_paths):
        service = TokenAlignmentService()
        target = tmp_path / "path.json"
        service.save_scan_path(scan_paths[1], target)
        both = tmp_path / "both.json"
        both.write_text(json.dumps([path.to_dict() for path in scan_paths]))

        assert service.load_scan_path(target) == scan_paths[1]
        with pytest.raises(TokenMapException, match="exactly one"):
            service.load_scan_path(both)
