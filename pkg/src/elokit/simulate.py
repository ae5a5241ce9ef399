"""Synthetic match generation with reproducible, independently seeded replications.

True skills are drawn once from a zero-mean Gaussian; each realization then
draws its own random pairings, venue flags, steps and outcomes from
independent substreams of a single seed sequence, so a replication ensemble
is bit-reproducible and realizations never share randomness.  Outcomes are
sampled from an AC model at the generator scale — the rating engine never
sees that scale, only the match records.

The bundled presets reproduce the package's reference benchmarks: a binary
convergence study (``example1``), its identification companion
(``example2``) and a ternary model-decoupling comparison (``example4``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from ._validation import check_flag, check_positive
from .diagnostics import NoiseModel
from .engine import (
    EngineConfig,
    MatchRecord,
    SkillState,
    Trajectory,
    TrajectoryOptions,
    run_matches,
)
from .exceptions import InvalidInputError
from .outcomes import ACParams, OutcomeScale, ac_table

__all__ = [
    "ConstantStep",
    "UniformStep",
    "SimConfig",
    "SimOutput",
    "Replication",
    "Preset",
    "generate_skills",
    "schedule_round",
    "sample_outcome",
    "simulate",
    "iter_outputs",
    "iter_replications",
    "run_replications",
    "example1_preset",
    "example2_preset",
    "example4_preset",
    "get_preset",
]


@dataclass(frozen=True)
class ConstantStep:
    """The same adaptation step for every match."""

    value: float

    def __post_init__(self) -> None:
        check_positive("step", self.value)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        # no draws consumed: swapping step policies must not shift other streams
        return np.full(n, float(self.value))

    @property
    def mean(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class UniformStep:
    """Steps drawn uniformly from a finite set, independently per match."""

    choices: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.choices:
            raise InvalidInputError("step choices must be non-empty")
        for c in self.choices:
            check_positive("step choice", c)
        object.__setattr__(self, "choices", tuple(float(c) for c in self.choices))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.choice(np.asarray(self.choices), size=n)

    @property
    def mean(self) -> float:
        return float(np.mean(self.choices))


@dataclass(frozen=True)
class SimConfig:
    """Generator configuration.

    The truth model carries the generator scale and home advantage; skills
    are drawn with variance `skill_variance` at that scale.  `hfa_fraction`
    is the fraction of matches played with the venue flag set.
    """

    players: int
    matches: int
    skill_variance: float
    model: ACParams
    steps: ConstantStep | UniformStep
    hfa_fraction: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.players < 2:
            raise InvalidInputError("need at least 2 players")
        if self.matches < 1:
            raise InvalidInputError("need at least 1 match")
        check_positive("skill_variance", self.skill_variance)
        if not 0.0 <= self.hfa_fraction <= 1.0:
            raise InvalidInputError("hfa_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class SimOutput:
    """One realization: true skills, the match log and the true differences."""

    true_skills: np.ndarray
    matches: list[MatchRecord]
    true_diffs: np.ndarray
    config: SimConfig


def _streams(config: SimConfig):
    root = np.random.SeedSequence(config.seed)
    skills_ss, realizations_ss = root.spawn(2)
    return skills_ss, realizations_ss


def generate_skills(config: SimConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """Draw the true skills: independent zero-mean Gaussians at the generator scale."""
    if rng is None:
        rng = np.random.default_rng(_streams(config)[0])
    return rng.normal(0.0, math.sqrt(config.skill_variance), size=config.players)


def schedule_round(config: SimConfig, rng: np.random.Generator) -> tuple[int, int]:
    """A uniformly random ordered pair (home, away) of distinct players."""
    i = int(rng.integers(0, config.players))
    j = int(rng.integers(0, config.players - 1))
    if j >= i:
        j += 1
    return i, j


def sample_outcome(
    z_star: float, config: SimConfig, rng: np.random.Generator, venue: int = 1
) -> int:
    """Draw one outcome from the truth model at true difference ``z_star``."""
    check_flag("venue", venue)
    model = config.model
    u = z_star / model.scale + model.hfa * venue
    p = ac_table(np.asarray(model.alpha), model.scores.as_array(), u)[0]
    r = rng.random()
    return int(min(np.searchsorted(np.cumsum(p), r, side="right"), len(p) - 1))


def _realize(config: SimConfig, skills: np.ndarray, seed_seq: np.random.SeedSequence) -> SimOutput:
    pair_ss, outcome_ss, step_ss = seed_seq.spawn(3)
    rng_pair = np.random.default_rng(pair_ss)
    rng_outcome = np.random.default_rng(outcome_ss)
    rng_step = np.random.default_rng(step_ss)
    n = config.matches
    m = config.players
    model = config.model

    home = rng_pair.integers(0, m, size=n)
    away = rng_pair.integers(0, m - 1, size=n)
    away = away + (away >= home)
    if config.hfa_fraction >= 1.0:
        venue = np.ones(n, dtype=int)
    elif config.hfa_fraction <= 0.0:
        venue = np.zeros(n, dtype=int)
    else:
        venue = (rng_pair.random(n) < config.hfa_fraction).astype(int)
    steps = config.steps.sample(rng_step, n)

    z_star = skills[home] - skills[away]
    u = z_star / model.scale + model.hfa * venue
    table = ac_table(np.asarray(model.alpha), model.scores.as_array(), u)
    cum = np.cumsum(table, axis=1)
    draws = rng_outcome.random(n)
    y = np.minimum((draws[:, None] > cum).sum(axis=1), model.levels - 1)

    records = [
        MatchRecord(t=k, home=int(i), away=int(j), outcome=int(o), venue=int(v), step=float(s))
        for k, (i, j, o, v, s) in enumerate(zip(home, away, y, venue, steps))
    ]
    return SimOutput(true_skills=skills, matches=records, true_diffs=z_star, config=config)


def simulate(config: SimConfig) -> SimOutput:
    """A single realization — identical to the first member of the replication ensemble."""
    skills_ss, realizations_ss = _streams(config)
    skills = generate_skills(config, np.random.default_rng(skills_ss))
    return _realize(config, skills, realizations_ss.spawn(1)[0])


def iter_outputs(
    config: SimConfig, n_realizations: int, redraw_skills: bool = False
) -> Iterator[SimOutput]:
    """Independent realizations; skills are shared unless `redraw_skills` is set."""
    if n_realizations < 1:
        raise InvalidInputError("need at least one realization")
    skills_ss, realizations_ss = _streams(config)
    children = realizations_ss.spawn(n_realizations)
    skills = None
    if not redraw_skills:
        skills = generate_skills(config, np.random.default_rng(skills_ss))
    for child in children:
        if redraw_skills:
            skills_child, realize_child = child.spawn(2)
            skills = generate_skills(config, np.random.default_rng(skills_child))
            yield _realize(config, skills, realize_child)
        else:
            yield _realize(config, skills, child)


@dataclass
class Replication:
    index: int
    output: SimOutput
    state: SkillState
    trajectory: Trajectory | None


def iter_replications(
    config: SimConfig,
    engine_config: EngineConfig,
    n_realizations: int,
    record: TrajectoryOptions | bool | None = None,
    redraw_skills: bool = False,
) -> Iterator[Replication]:
    """Simulate and rank each realization with a fresh engine state."""
    for index, output in enumerate(iter_outputs(config, n_realizations, redraw_skills)):
        state = SkillState(engine_config)
        _, trajectory = run_matches(state, output.matches, record)
        yield Replication(index=index, output=output, state=state, trajectory=trajectory)


def run_replications(
    config: SimConfig,
    engine_config: EngineConfig,
    n_realizations: int,
    record: TrajectoryOptions | bool | None = None,
    redraw_skills: bool = False,
) -> list[Replication]:
    """Materialised version of :func:`iter_replications`."""
    return list(iter_replications(config, engine_config, n_realizations, record, redraw_skills))


# ---------------------------------------------------------------------------
# benchmark presets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Preset:
    """A fully pinned benchmark: generator, engine(s), windows and methods."""

    name: str
    sim: SimConfig
    engine: EngineConfig
    gelo_engine: EngineConfig | None = None
    train: tuple[int, int] | None = None
    test: tuple[int, int] | None = None
    methods: tuple[str, ...] = ()
    realizations: int = 200
    noise: NoiseModel | None = None


_REFERENCE_SCALE = 174.0  # canonical (base-e) version of the classic base-10, s=400 scale
_REFERENCE_HFA = 0.35
_REFERENCE_SKILL_VARIANCE = 0.5
_REFERENCE_PLAYERS = 30


def _step_policy(step) -> ConstantStep | UniformStep:
    if step == "random":
        return UniformStep((10.0, 20.0, 30.0))
    return ConstantStep(float(step))


def example1_preset(
    step="random", seed: int = 0, matches: int = 1000, realizations: int = 200
) -> Preset:
    """Binary convergence study: 30 players, scale 174, random K in {10,20,30} or fixed K.

    Outcomes follow the logistic model at generator scale 1 with home
    advantage 0.35 on every match; the engine ranks with the matching
    nominal parameters.
    """
    truth = ACParams.binary(scale=1.0, hfa=_REFERENCE_HFA)
    sim = SimConfig(
        players=_REFERENCE_PLAYERS,
        matches=matches,
        skill_variance=_REFERENCE_SKILL_VARIANCE,
        model=truth,
        steps=_step_policy(step),
        hfa_fraction=1.0,
        seed=seed,
    )
    engine = EngineConfig.elo(scale=_REFERENCE_SCALE, hfa=_REFERENCE_HFA)
    return Preset(name="example1", sim=sim, engine=engine, realizations=realizations)


def example2_preset(step="random", seed: int = 0, realizations: int = 200) -> Preset:
    """Identification companion of ``example1``: fit after convergence, score out of sample.

    Runs 6000 matches; the 2000 after burn-in are the training window and the
    final 2000 the test window, keeping the windows disjoint.
    """
    base = example1_preset(step=step, seed=seed, matches=6000, realizations=realizations)
    policy = base.sim.steps
    noise = NoiseModel.from_step(
        scale=_REFERENCE_SCALE,
        step=policy.mean,
        skill_variance=_REFERENCE_SKILL_VARIANCE,
        generator_scale=base.sim.model.scale,
    )
    return replace(
        base,
        name="example2",
        train=(2000, 4000),
        test=(4000, 6000),
        methods=("assume-no-error", "theoretical", "data-fit"),
        noise=noise,
    )


def example4_preset(step=20, seed: int = 0, realizations: int = 200) -> Preset:
    """Ternary model-decoupling benchmark.

    Outcomes are drawn from an AC model with alpha_1 = -0.4 and home
    advantage 0.35 on every match; the Elo ranking ignores the home
    advantage.  Matches 0..3999 are burn-in, 4000..7999 the training window
    and 8000..12000 the test window.
    """
    scores = OutcomeScale.uniform(3)
    truth = ACParams(scale=1.0, hfa=_REFERENCE_HFA, alpha=(0.0, -0.4, 0.0), scores=scores)
    sim = SimConfig(
        players=_REFERENCE_PLAYERS,
        matches=12001,
        skill_variance=_REFERENCE_SKILL_VARIANCE,
        model=truth,
        steps=_step_policy(step),
        hfa_fraction=1.0,
        seed=seed,
    )
    engine = EngineConfig.elo(scale=_REFERENCE_SCALE, hfa=0.0, scores=scores)
    gelo_engine = EngineConfig.gelo(
        ACParams(scale=_REFERENCE_SCALE, hfa=_REFERENCE_HFA, alpha=truth.alpha, scores=scores)
    )
    return Preset(
        name="example4",
        sim=sim,
        engine=engine,
        gelo_engine=gelo_engine,
        train=(4000, 8000),
        test=(8000, 12001),
        methods=(
            "conventional",
            "simple-no-hfa",
            "simple-with-hfa",
            "optimal-scaling",
            "fully-adaptive",
            "gelo-reference",
            "ground-truth",
        ),
        realizations=realizations,
    )


_PRESETS = {
    "example1": example1_preset,
    "example2": example2_preset,
    "example4": example4_preset,
}


def get_preset(name: str, **kwargs) -> Preset:
    """Look up a named synthetic preset (``example1``, ``example2``, ``example4``)."""
    try:
        factory = _PRESETS[name]
    except KeyError:
        raise InvalidInputError(
            f"unknown preset {name!r}; available: {sorted(_PRESETS)}"
        ) from None
    return factory(**kwargs)
