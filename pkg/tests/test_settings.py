"""Tests for settings layering and run configuration."""

from pathlib import Path

import pytest

from gaze2weights.config.settings import RunConfig, Settings
from gaze2weights.core.entities import SessionMode
from gaze2weights.exceptions import ConfigurationException


@pytest.fixture
def clean_settings(monkeypatch) -> Settings:
    for name in ("GAZE2W_SEED", "GAZE2W_PRUNE_THRESHOLD", "GAZE2W_DEBUG", "GAZE2W_DEFAULT_MODE"):
        monkeypatch.delenv(name, raising=False)
    return Settings()


class TestSettings:
    """Environment-backed defaults."""

    def test_defaults(self, clean_settings):
        assert clean_settings.seed == 42
        assert clean_settings.prune_threshold == 5
        assert clean_settings.w_base == 3.0
        assert clean_settings.default_mode == SessionMode.COMBINED

    def test_environment_overrides(self, monkeypatch):
        monkeypatch.setenv("GAZE2W_SEED", "7")
        monkeypatch.setenv("GAZE2W_DEFAULT_MODE", "reading")

        loaded = Settings()

        assert loaded.seed == 7
        assert loaded.default_mode == SessionMode.READING

    @pytest.mark.parametrize("raw,expected", [("yes", True), ("0", False), ("maybe", False)])
    def test_debug_flag_parsing(self, monkeypatch, raw, expected):
        monkeypatch.setenv("GAZE2W_DEBUG", raw)

        assert Settings().debug is expected


class TestBuildRunConfig:
    """Layering of overrides over settings."""

    def test_none_overrides_fall_through(self, clean_settings):
        config = clean_settings.build_run_config({"seed": None, "prune_threshold": 3})

        assert config.seed == 42
        assert config.prune_threshold == 3

    def test_zero_is_a_real_override(self, clean_settings):
        config = clean_settings.build_run_config({"dpo_gamma": 0.0, "seed": 0})

        assert config.dpo_gamma == 0.0
        assert config.seed == 0

    def test_unknown_keys_raise(self, clean_settings):
        with pytest.raises(ConfigurationException, match="Unknown configuration keys") as excinfo:
            clean_settings.build_run_config({"colour": "blue", "seed": 1})

        assert excinfo.value.details["keys"] == ["colour"]

    @pytest.mark.parametrize(
        "overrides,message",
        [
            ({"prune_threshold": 0}, r"prune_threshold.*>= 1"),
            ({"dpo_beta": 0.0}, "dpo_beta must be > 0"),
            ({"w_base": -1.0}, "w_base.*>= 0"),
            ({"dispersion_deg": 0.0}, "strictly positive"),
            ({"seed": -3}, "seed must be >= 0"),
        ],
    )
    def test_invalid_values_raise(self, clean_settings, overrides, message):
        with pytest.raises(ConfigurationException, match=message):
            clean_settings.build_run_config(overrides)


class TestRunConfig:
    """Derived values and the config hash."""

    def test_line_span_per_mode(self):
        config = RunConfig(mode=SessionMode.WRITING, line_span_reading=2)

        assert config.line_span() == 5
        assert config.line_span(SessionMode.READING) == 2
        assert config.line_span(SessionMode.COMBINED) == 4

    def test_taxonomy_from_comma_list(self):
        assert RunConfig(taxonomy="a, b,c").taxonomy == ("a", "b", "c")

    def test_duplicate_taxonomy_raises(self):
        with pytest.raises(ValueError, match="duplicate"):
            RunConfig(taxonomy=["a", "a"])

    def test_ablation(self):
        ablation = RunConfig(use_rarity=False, use_higher_order=False).ablation()

        assert ablation.to_dict() == {
            "use_salience": True,
            "use_rarity": False,
            "use_monograms": True,
            "use_higher_order": False,
        }

    def test_hash_ignores_output_dir(self):
        first = RunConfig(output_dir=Path("one"))
        second = RunConfig(output_dir=Path("two"))

        assert first.config_hash() == second.config_hash()
        assert "output_dir" not in first.hashed_payload()

    def test_hash_tracks_seed(self):
        assert RunConfig(seed=1).config_hash() != RunConfig(seed=2).config_hash()

    def test_config_is_frozen_and_strict(self):
        with pytest.raises(ValueError):
            RunConfig(unknown_field=1)
