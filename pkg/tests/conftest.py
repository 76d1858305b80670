"""Shared fixtures for gaze2weights tests."""

from typing import Callable, Optional, Sequence

import numpy as np
import pytest
import structlog

from gaze2weights.core.entities import (
    AstToken,
    BoundingBox,
    GazeSample,
    PathEntry,
    ScanPath,
    SessionGeometry,
    SessionMode,
    TokenMap,
)
from gaze2weights.core.taxonomy import DEFAULT_TAXONOMY, FUNCTION_CALL, LOOP, OTHER, VARIABLE_DECLARATION

# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

JAVA_SNIPPET = """public static int sumPositive(int[] values) {
    int total = 0;
    for (int i = 0; i < values.length; i++) {
        if (values[i] > 0) {
            total = add(total, values[i]);
        }
    }
    return total;
}
"""


def build_token_map(
    classes: Sequence[str],
    lines: Optional[Sequence[int]] = None,
    taxonomy: Sequence[str] = DEFAULT_TAXONOMY,
) -> TokenMap:
    """Tokens laid out left to right, 40 px apart, one 20 px row per line."""
    lines = list(lines) if lines is not None else [1] * len(classes)
    tokens = tuple(
        AstToken(
            id=index,
            text=f"t{index}",
            semantic_class=label,
            line=line,
            bbox=BoundingBox(index * 40.0, (line - 1) * 20.0, index * 40.0 + 30.0, line * 20.0),
        )
        for index, (label, line) in enumerate(zip(classes, lines))
    )
    return TokenMap(tokens=tokens, taxonomy=tuple(taxonomy))


def fixation_samples(
    points: Sequence[tuple[float, float]], samples_per_point: int, period_ms: float, start_ms: float = 0.0
) -> list[GazeSample]:
    """Steady gaze on each point for ``samples_per_point`` samples."""
    samples = []
    timestamp = start_ms
    for x, y in points:
        for _ in range(samples_per_point):
            samples.append(GazeSample(timestamp, x, y))
            timestamp += period_ms
    return samples


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------


@pytest.fixture(autouse=True)
def reset_logging():
    """CLI tests bind structlog to a captured stream; restore defaults afterwards."""
    yield
    structlog.reset_defaults()


@pytest.fixture
def geometry() -> SessionGeometry:
    return SessionGeometry(sample_rate=120.0, pixels_per_degree=40.0, screen_w=1920, screen_h=1080)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)


@pytest.fixture
def token_map_factory() -> Callable[..., TokenMap]:
    return build_token_map


@pytest.fixture
def samples_factory() -> Callable[..., list[GazeSample]]:
    return fixation_samples


@pytest.fixture
def small_token_map() -> TokenMap:
    """Eight tokens over three lines drawn from four classes."""
    return build_token_map(
        [VARIABLE_DECLARATION, VARIABLE_DECLARATION, OTHER, LOOP, OTHER, FUNCTION_CALL, OTHER, VARIABLE_DECLARATION],
        lines=[1, 1, 1, 2, 2, 2, 3, 3],
    )


@pytest.fixture
def scan_paths() -> list[ScanPath]:
    """Reading and writing paths over ``small_token_map``."""
    reading = ScanPath(
        SessionMode.READING,
        tuple(PathEntry(index, token) for index, token in enumerate([0, 1, 3, 5, 0, 1, 3, 5, 0, 1, 3, 5, 7])),
        "session_0000_reading",
    )
    writing = ScanPath(
        SessionMode.WRITING,
        tuple(PathEntry(index, token) for index, token in enumerate([0, 3, 0, 3, 0, 3, 0, 3, 0, 3, 0, 3])),
        "session_0001_writing",
    )
    return [reading, writing]


@pytest.fixture
def java_snippet() -> str:
    return JAVA_SNIPPET
