"""Shared fixtures and hypothesis strategies."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from elokit.outcomes import ACParams, OutcomeScale


@pytest.fixture
def five_level_params() -> ACParams:
    """A non-trivial symmetric five-level model used across oracle tests."""
    return ACParams(
        scale=174.0,
        hfa=0.0,
        alpha=(0.0, 1.3, 1.2, 1.3, 0.0),
        scores=OutcomeScale((0.0, 0.22, 0.5, 0.78, 1.0)),
    )


@st.composite
def symmetric_scores(draw, max_levels: int = 6) -> OutcomeScale:
    levels = draw(st.integers(min_value=2, max_value=max_levels))
    n_half = (levels - 2) // 2
    half = sorted(
        draw(
            st.lists(
                st.floats(min_value=0.02, max_value=0.45),
                min_size=n_half, max_size=n_half, unique=True,
            )
        )
    )
    middle = [0.5] if levels % 2 == 1 else []
    delta = [0.0] + half + middle + [1.0 - v for v in reversed(half)] + [1.0]
    return OutcomeScale(tuple(delta))


@st.composite
def symmetric_ac_params(draw, max_levels: int = 6) -> ACParams:
    scores = draw(symmetric_scores(max_levels=max_levels))
    n_free = (scores.levels - 1) // 2
    free = draw(
        st.lists(
            st.floats(min_value=-3.0, max_value=3.0),
            min_size=n_free, max_size=n_free,
        )
    )
    scale = draw(st.sampled_from([1.0, 10.0, 174.0, 400.0]))
    hfa = draw(st.floats(min_value=-1.0, max_value=1.0))
    return ACParams.symmetric(scale=scale, hfa=hfa, scores=scores, free_alpha=free)


def finite_diff(func, x: float, step: float) -> float:
    """Central difference derivative estimate."""
    return (func(x + step) - func(x - step)) / (2.0 * step)


def rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)
