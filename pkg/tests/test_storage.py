"""Tests for canonical artifact serialisation."""

import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from gaze2weights.exceptions import ArtifactException
from gaze2weights.utils.storage import (
    canonical_dumps,
    file_digest,
    format_float,
    get_output_directory,
    read_jsonl,
    write_canonical_json,
    write_jsonl,
)


class TestCanonicalDumps:
    """Byte-stable JSON encoding."""

    def test_keys_are_sorted_and_compact(self):
        assert canonical_dumps({"b": [1, 2.5], "a": None, "c": True}) == '{"a":null,"b":[1,2.5],"c":true}'

    def test_whole_floats_keep_a_decimal_point(self):
        assert format_float(3.0) == "3.0"
        assert canonical_dumps([1, 1.0]) == "[1,1.0]"

    @pytest.mark.parametrize("value", [0.1, 1 / 3, 2.0 ** -40, 123456.789e10])
    def test_floats_survive_a_round_trip(self, value):
        assert json.loads(canonical_dumps(value)) == value

    def test_numpy_values_are_plain_json(self):
        payload = {"array": np.array([0.5, 1.5]), "count": np.int64(3), "flag": np.bool_(False)}

        assert canonical_dumps(payload) == '{"array":[0.5,1.5],"count":3,"flag":false}'

    def test_indent_matches_standard_layout(self):
        payload = {"z": [1, {"y": "x"}], "a": {}}

        assert canonical_dumps(payload, indent=2) == json.dumps(payload, indent=2, sort_keys=True)

    def test_non_finite_numbers_raise(self):
        with pytest.raises(ArtifactException, match="non-finite"):
            canonical_dumps({"weight": float("nan")})

    def test_unknown_types_raise(self):
        with pytest.raises(ArtifactException, match="set"):
            canonical_dumps({1, 2})


class TestArtifactFiles:
    """Writing, reading and hashing artifact files."""

    def test_write_canonical_json_creates_parents(self, tmp_path: Path):
        target = tmp_path / "nested" / "priors.json"

        written = write_canonical_json(target, {"b": 1, "a": 2})

        assert target.read_text() == '{"a":2,"b":1}\n'
        assert written == len(target.read_bytes())

    def test_jsonl_round_trip_skips_blank_lines(self, tmp_path: Path):
        target = tmp_path / "weights.jsonl"
        write_jsonl(target, [{"example_id": 0, "weights": [3.0]}, {"example_id": 1, "weights": []}])
        target.write_text(target.read_text() + "\n")

        assert read_jsonl(target) == [{"example_id": 0, "weights": [3.0]}, {"example_id": 1, "weights": []}]

    def test_read_jsonl_reports_bad_line(self, tmp_path: Path):
        target = tmp_path / "weights.jsonl"
        target.write_text('{"example_id": 0}\n{broken\n')

        with pytest.raises(ArtifactException, match="line 2") as excinfo:
            read_jsonl(target)

        assert excinfo.value.details["line"] == 2

    def test_file_digest(self, tmp_path: Path):
        target = tmp_path / "tables.json"
        target.write_bytes(b"{}\n")

        assert file_digest(target) == {"bytes": 3, "sha256": hashlib.sha256(b"{}\n").hexdigest()}


class TestOutputDirectory:
    """Bundle directory resolution order."""

    def test_explicit_value_wins(self, monkeypatch, tmp_path: Path):
        monkeypatch.setenv("GAZE2W_OUTPUT_DIR", "/from/env")

        assert get_output_directory(tmp_path) == tmp_path

    def test_environment_is_second(self, monkeypatch):
        monkeypatch.setenv("GAZE2W_OUTPUT_DIR", "/from/env")

        assert get_output_directory(None) == Path("/from/env")

    def test_default_is_relative(self, monkeypatch):
        monkeypatch.delenv("GAZE2W_OUTPUT_DIR", raising=False)

        assert get_output_directory(None) == Path("gaze_bundle")
