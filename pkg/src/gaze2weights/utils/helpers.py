"""Seed derivation and config layering helpers."""

from typing import Any, Optional

import numpy as np


def first_not_none(*values: Any) -> Optional[Any]:
    """First value that is not None; a flag set to ``0`` or ``False`` still overrides the settings layer."""
    return next((value for value in values if value is not None), None)


def derive_seed(seed: int, index: int) -> int:
    """Per-item seed ``seed XOR index`` used for examples and sessions."""
    return int(seed) ^ int(index)


def derived_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, index))
