"""Configuration settings for gaze2weights."""

import hashlib
import json
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings

from ..core.artifacts import AblationConfig
from ..core.entities import SessionMode
from ..core.taxonomy import DEFAULT_TAXONOMY
from ..exceptions import ConfigurationException
from ..utils.helpers import first_not_none


class LogLevel(str, Enum):
    """Log levels."""

    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"


class Settings(BaseSettings):
    """Application settings."""

    model_config = ConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
        populate_by_name=True,
    )

    # General settings
    app_name: str = "gaze2weights"
    version: str = "0.1.0"
    debug: bool = Field(default=False, validation_alias="GAZE2W_DEBUG")
    log_level: LogLevel = Field(default=LogLevel.INFO, validation_alias="GAZE2W_LOG_LEVEL")
    default_mode: SessionMode = Field(default=SessionMode.COMBINED, validation_alias="GAZE2W_DEFAULT_MODE")

    # Gaze preprocessing
    dispersion_deg: float = Field(default=1.0, validation_alias="GAZE2W_DISPERSION_DEG")
    min_fixation_ms: float = Field(default=100.0, validation_alias="GAZE2W_MIN_FIXATION_MS")
    max_velocity_deg_s: float = Field(default=1000.0, validation_alias="GAZE2W_MAX_VELOCITY")

    # Artifact extraction
    prune_threshold: int = Field(default=5, validation_alias="GAZE2W_PRUNE_THRESHOLD")
    line_span_reading: int = Field(default=3, validation_alias="GAZE2W_LINE_SPAN_READING")
    line_span_writing: int = Field(default=5, validation_alias="GAZE2W_LINE_SPAN_WRITING")
    line_span_combined: int = Field(default=4, validation_alias="GAZE2W_LINE_SPAN_COMBINED")
    seed: int = Field(default=42, validation_alias="GAZE2W_SEED")

    # Weights and objectives
    w_base: float = Field(default=3.0, validation_alias="GAZE2W_W_BASE")
    dpo_beta: float = Field(default=0.1, validation_alias="GAZE2W_DPO_BETA")
    dpo_gamma: float = Field(default=0.5, validation_alias="GAZE2W_DPO_GAMMA")
    tokenizer: str = Field(default="demo", validation_alias="GAZE2W_TOKENIZER")
    tiktoken_encoding: str = Field(default="cl100k_base", validation_alias="GAZE2W_TIKTOKEN_ENCODING")

    # Layout and metrics
    cell_width_px: float = Field(default=8.0, validation_alias="GAZE2W_CELL_WIDTH")
    cell_height_px: float = Field(default=16.0, validation_alias="GAZE2W_CELL_HEIGHT")
    attention_k: int = Field(default=20, validation_alias="GAZE2W_ATTENTION_K")

    @field_validator("debug", mode="before")
    @classmethod
    def validate_debug(cls, v: Any) -> bool:
        """Validate debug is a boolean, ignore invalid values."""
        if isinstance(v, bool):
            return v
        if isinstance(v, str):
            v_lower = v.lower()
            if v_lower in ("true", "1", "yes", "on"):
                return True
            if v_lower in ("false", "0", "no", "off", ""):
                return False
        return False

    def build_run_config(self, overrides: Optional[Mapping[str, Any]] = None) -> "RunConfig":
        """Build a RunConfig with these settings as the default layer.

        ``overrides`` holds values from a config file or CLI flags; ``None``
        entries fall through to the settings value.
        """
        overrides = dict(overrides or {})
        defaults: Dict[str, Any] = {
            "mode": self.default_mode,
            "dispersion_deg": self.dispersion_deg,
            "min_fixation_ms": self.min_fixation_ms,
            "max_velocity_deg_s": self.max_velocity_deg_s,
            "prune_threshold": self.prune_threshold,
            "line_span_reading": self.line_span_reading,
            "line_span_writing": self.line_span_writing,
            "line_span_combined": self.line_span_combined,
            "w_base": self.w_base,
            "dpo_beta": self.dpo_beta,
            "dpo_gamma": self.dpo_gamma,
            "seed": self.seed,
            "tokenizer": self.tokenizer,
            "tiktoken_encoding": self.tiktoken_encoding,
            "cell_width_px": self.cell_width_px,
            "cell_height_px": self.cell_height_px,
        }
        unknown = set(overrides) - set(RunConfig.model_fields)
        if unknown:
            raise ConfigurationException("Unknown configuration keys", {"keys": sorted(unknown)})
        merged: Dict[str, Any] = {}
        for key in RunConfig.model_fields:
            value = first_not_none(overrides.get(key), defaults.get(key))
            if value is not None:
                merged[key] = value
        try:
            return RunConfig(**merged)
        except ValidationError as exc:
            first = exc.errors()[0]
            location = ".".join(str(part) for part in first["loc"])
            raise ConfigurationException(
                f"Invalid run configuration ({location}): {first['msg']}", {"errors": exc.errors()}
            ) from exc


class RunConfig(BaseModel):
    """Every constant and path of one pipeline run."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: SessionMode = SessionMode.COMBINED
    taxonomy: Tuple[str, ...] = DEFAULT_TAXONOMY
    dispersion_deg: float = 1.0
    min_fixation_ms: float = 100.0
    max_velocity_deg_s: float = 1000.0
    prune_threshold: int = 5
    line_span_reading: int = 3
    line_span_writing: int = 5
    line_span_combined: int = 4
    w_base: float = 3.0
    dpo_beta: float = 0.1
    dpo_gamma: float = 0.5
    seed: int = 42
    tokenizer: str = "demo"
    tiktoken_encoding: str = "cl100k_base"
    cell_width_px: float = 8.0
    cell_height_px: float = 16.0
    use_salience: bool = True
    use_rarity: bool = True
    use_monograms: bool = True
    use_higher_order: bool = True
    corpus_dir: Optional[Path] = None
    examples_dir: Optional[Path] = None
    output_dir: Path = Path("gaze_bundle")

    @field_validator("dispersion_deg", "min_fixation_ms", "max_velocity_deg_s", "cell_width_px", "cell_height_px")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("must be strictly positive")
        return v

    @field_validator("prune_threshold", "line_span_reading", "line_span_writing", "line_span_combined")
    @classmethod
    def validate_at_least_one(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @field_validator("dpo_beta")
    @classmethod
    def validate_beta(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("dpo_beta must be > 0")
        return v

    @field_validator("dpo_gamma", "w_base")
    @classmethod
    def validate_nonnegative(cls, v: float) -> float:
        if v < 0:
            raise ValueError("must be >= 0")
        return v

    @field_validator("taxonomy", mode="before")
    @classmethod
    def validate_taxonomy(cls, v: Any) -> Tuple[str, ...]:
        if isinstance(v, str):
            v = [label.strip() for label in v.split(",")]
        labels = tuple(str(label) for label in v)
        if not labels:
            raise ValueError("taxonomy must not be empty")
        if len(set(labels)) != len(labels):
            raise ValueError("taxonomy contains duplicate labels")
        return labels

    @model_validator(mode="after")
    def validate_seed(self) -> "RunConfig":
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        return self

    def line_span(self, mode: Optional[SessionMode] = None) -> int:
        """Line-span limit L for a session mode."""
        mode = mode or self.mode
        return {
            SessionMode.READING: self.line_span_reading,
            SessionMode.WRITING: self.line_span_writing,
            SessionMode.COMBINED: self.line_span_combined,
        }[mode]

    def ablation(self) -> AblationConfig:
        return AblationConfig(
            use_salience=self.use_salience,
            use_rarity=self.use_rarity,
            use_monograms=self.use_monograms,
            use_higher_order=self.use_higher_order,
        )

    def hashed_payload(self) -> Dict[str, Any]:
        """Config as recorded in the manifest; the output location is not part of it."""
        return self.model_dump(mode="json", exclude={"output_dir"})

    def config_hash(self) -> str:
        canonical = json.dumps(self.hashed_payload(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# Global settings instance
settings = Settings()
