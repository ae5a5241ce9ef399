"""Small input-validation helpers shared across the package."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .exceptions import InvalidInputError


def check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise InvalidInputError(f"{name} must be finite, got {value!r}")
    return value


def check_positive(name: str, value: float) -> float:
    value = check_finite(name, value)
    if value <= 0.0:
        raise InvalidInputError(f"{name} must be > 0, got {value!r}")
    return value


def check_nonnegative(name: str, value: float) -> float:
    value = check_finite(name, value)
    if value < 0.0:
        raise InvalidInputError(f"{name} must be >= 0, got {value!r}")
    return value


def check_flag(name: str, value: int) -> int:
    if value not in (0, 1):
        raise InvalidInputError(f"{name} must be 0 or 1, got {value!r}")
    return int(value)


def check_outcome_index(value: int, levels: int) -> int:
    if not isinstance(value, (int, np.integer)):
        raise InvalidInputError(f"outcome index must be an integer, got {value!r}")
    if not 0 <= value < levels:
        raise InvalidInputError(f"outcome index {value} outside [0, {levels})")
    return int(value)


def check_finite_array(name: str, values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} must be finite everywhere")
    return arr


def check_probability(name: str, value: float, *, open_interval: bool = False) -> float:
    value = check_finite(name, value)
    if open_interval:
        if not 0.0 < value < 1.0:
            raise InvalidInputError(f"{name} must lie strictly inside (0, 1), got {value!r}")
    elif not 0.0 <= value <= 1.0:
        raise InvalidInputError(f"{name} must lie in [0, 1], got {value!r}")
    return value
