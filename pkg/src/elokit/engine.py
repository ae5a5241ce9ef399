"""Sequential online rating: multilevel Elo and G-Elo updates.

Both algorithms share one feedback rule.  After match ``t`` between home
player ``i`` and away player ``j`` with outcome score ``rho_y`` the skills
move in opposite directions by the same amount::

    theta_i += K * (rho_y - G(z / s + eta * h))
    theta_j -= K * (rho_y - G(z / s + eta * h))

where ``z = theta_i - theta_j`` and ``G`` is the expected score: logistic,
Gaussian CDF or generalized logistic for Elo, or the AC expected score for
G-Elo.  The update is zero-sum, touches exactly two entries, and is applied
strictly in match order.  A state instance is single-writer; distinct
instances may run concurrently and snapshots are plain value copies.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, NamedTuple, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_finite, check_flag, check_positive
from .exceptions import InvalidInputError
from .outcomes import ACParams, OutcomeScale, ac_table

__all__ = [
    "MatchRecord",
    "EloScore",
    "GEloScore",
    "EngineConfig",
    "SkillState",
    "PlayerSummary",
    "TrajectoryOptions",
    "Trajectory",
    "skill_diff",
    "elo_update",
    "gelo_update",
    "apply_update",
    "run_matches",
    "RatingSystem",
]

PlayerId = Hashable


@dataclass(frozen=True, slots=True)
class MatchRecord:
    """One observed match: participants, outcome index, venue flag and step."""

    t: int
    home: PlayerId
    away: PlayerId
    outcome: int
    venue: int
    step: float
    date: dt.date | None = None

    def __post_init__(self) -> None:
        if self.home == self.away:
            raise InvalidInputError(f"match {self.t}: a player cannot face itself")
        if not isinstance(self.outcome, (int, np.integer)) or self.outcome < 0:
            raise InvalidInputError(f"match {self.t}: outcome index must be a non-negative integer")
        if self.venue not in (0, 1):
            raise InvalidInputError(f"match {self.t}: venue flag must be 0 or 1")
        if not (isinstance(self.step, (int, float)) and math.isfinite(self.step) and self.step > 0):
            raise InvalidInputError(f"match {self.t}: step must be a positive finite number")


@dataclass(frozen=True)
class EloScore:
    """Expected-score choice for the Elo update."""

    kind: str = "logistic"  # logistic | gaussian | generalized-logistic
    base: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("logistic", "gaussian", "generalized-logistic"):
            raise InvalidInputError(f"unknown expected-score kind {self.kind!r}")
        if self.kind == "generalized-logistic":
            if self.base is None or not self.base > 1.0:
                raise InvalidInputError("generalized-logistic needs an exponent base > 1")
        elif self.base is not None:
            raise InvalidInputError("base is only meaningful for generalized-logistic")


@dataclass(frozen=True)
class GEloScore:
    """AC expected score for the G-Elo update; `alpha` as in :class:`ACParams`."""

    alpha: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))


@dataclass(frozen=True)
class EngineConfig:
    """Static configuration of a rating run."""

    scale: float
    hfa: float
    scores: OutcomeScale
    algorithm: EloScore | GEloScore = field(default_factory=EloScore)
    initial_skill: float = 0.0

    def __post_init__(self) -> None:
        check_positive("scale", self.scale)
        check_finite("hfa", self.hfa)
        check_finite("initial_skill", self.initial_skill)
        if isinstance(self.algorithm, GEloScore):
            alpha = self.algorithm.alpha
            if len(alpha) != self.scores.levels:
                raise InvalidInputError("G-Elo alpha length must match the outcome levels")
            if alpha[0] != 0.0 or alpha[-1] != 0.0:
                raise InvalidInputError("G-Elo alpha_0 and alpha_{L-1} must be 0")

    @classmethod
    def elo(
        cls,
        scale: float,
        hfa: float = 0.0,
        scores: OutcomeScale | None = None,
        expected: str = "logistic",
        base: float | None = None,
        initial_skill: float = 0.0,
    ) -> "EngineConfig":
        """Multilevel Elo; `scores` defaults to the binary win/loss scale."""
        return cls(
            scale=scale,
            hfa=hfa,
            scores=scores if scores is not None else OutcomeScale.uniform(2),
            algorithm=EloScore(kind=expected, base=base),
            initial_skill=initial_skill,
        )

    @classmethod
    def gelo(cls, params: ACParams, initial_skill: float = 0.0) -> "EngineConfig":
        """G-Elo driven by a full AC model; scale, HFA and scores come from it."""
        return cls(
            scale=params.scale,
            hfa=params.hfa,
            scores=params.scores,
            algorithm=GEloScore(alpha=params.alpha),
            initial_skill=initial_skill,
        )

    @property
    def is_gelo(self) -> bool:
        return isinstance(self.algorithm, GEloScore)

    def ac_params(self) -> ACParams:
        """The AC model a G-Elo configuration updates against."""
        if not self.is_gelo:
            raise InvalidInputError("only G-Elo configurations carry an AC model")
        return ACParams(
            scale=self.scale, hfa=self.hfa, alpha=self.algorithm.alpha, scores=self.scores
        )


_SQRT2 = math.sqrt(2.0)


def _logistic_scalar(u: float) -> float:
    if u >= 0.0:
        return 1.0 / (1.0 + math.exp(-u))
    e = math.exp(u)
    return e / (1.0 + e)


def _expected_score_fn(config: EngineConfig) -> Callable[[float], float]:
    """Scalar expected-score closure for the engine hot path.

    Mirrors the vectorized routines in :mod:`elokit.outcomes` expression for
    expression, so trajectories agree with the reference model to rounding.
    """
    algo = config.algorithm
    if isinstance(algo, GEloScore):
        pairs = tuple(zip(algo.alpha, config.scores.delta))

        def ac_mean(u: float) -> float:
            ws = [a + d * u for a, d in pairs]
            m = max(ws)
            es = [math.exp(w - m) for w in ws]
            return sum(d * e for (_, d), e in zip(pairs, es)) / sum(es)

        return ac_mean
    if algo.kind == "logistic":
        return _logistic_scalar
    if algo.kind == "gaussian":
        return lambda u: 0.5 * math.erfc(-u / _SQRT2)
    ln_base = math.log(algo.base)
    return lambda u: _logistic_scalar(u * ln_base)


class PlayerSummary(NamedTuple):
    player: PlayerId
    skill: float
    n_matches: int
    mean_step: float


class SkillState:
    """Evolving rating state: skills plus per-player match counts and step sums.

    Mutable and single-writer; use :meth:`snapshot` / :meth:`summary` for
    values that are safe to share.
    """

    __slots__ = ("config", "skills", "match_counts", "step_sums")

    def __init__(
        self,
        config: EngineConfig,
        skills: dict | None = None,
        match_counts: dict | None = None,
        step_sums: dict | None = None,
    ) -> None:
        self.config = config
        self.skills: dict[PlayerId, float] = dict(skills) if skills else {}
        self.match_counts: dict[PlayerId, int] = (
            dict(match_counts) if match_counts else {p: 0 for p in self.skills}
        )
        self.step_sums: dict[PlayerId, float] = (
            dict(step_sums) if step_sums else {p: 0.0 for p in self.skills}
        )

    def register(self, *players: PlayerId) -> None:
        init = self.config.initial_skill
        for p in players:
            if p not in self.skills:
                self.skills[p] = init
                self.match_counts[p] = 0
                self.step_sums[p] = 0.0

    def skill(self, player: PlayerId) -> float:
        return self.skills.get(player, self.config.initial_skill)

    def players(self) -> tuple[PlayerId, ...]:
        return tuple(self.skills)

    def total_skill(self) -> float:
        return math.fsum(self.skills.values())

    def snapshot(self) -> dict[PlayerId, float]:
        return dict(self.skills)

    def summary(self) -> list[PlayerSummary]:
        rows = []
        for p, skill in self.skills.items():
            n = self.match_counts.get(p, 0)
            mean_step = self.step_sums.get(p, 0.0) / n if n else 0.0
            rows.append(PlayerSummary(p, skill, n, mean_step))
        return rows

    def copy(self) -> "SkillState":
        return SkillState(self.config, self.skills, self.match_counts, self.step_sums)


def skill_diff(state: SkillState, home: PlayerId, away: PlayerId) -> float:
    """Pre-match skill difference ``theta_home - theta_away``."""
    return state.skill(home) - state.skill(away)


@dataclass(frozen=True)
class TrajectoryOptions:
    """What :func:`run_matches` records.

    stride
        Full skill snapshots are taken after every `stride`-th update (and
        after the final one).
    participants
        Also record the post-update skills of the two players of each match,
        which gives per-player series on the player's own match clock.
    """

    stride: int = 1
    participants: bool = False

    def __post_init__(self) -> None:
        if self.stride < 1:
            raise InvalidInputError("snapshot stride must be >= 1")


class Trajectory:
    """Recorded history of a rating run.

    ``times[k]`` / ``diffs[k]`` hold the sequence index and the pre-update
    skill difference of the k-th processed match, aligned one-to-one with the
    match sequence given to :func:`run_matches`.
    """

    __slots__ = (
        "options",
        "times",
        "diffs",
        "homes",
        "aways",
        "home_after",
        "away_after",
        "snapshot_times",
        "snapshots",
    )

    def __init__(self, options: TrajectoryOptions) -> None:
        self.options = options
        self.times: list[int] = []
        self.diffs: list[float] = []
        self.homes: list[PlayerId] = []
        self.aways: list[PlayerId] = []
        self.home_after: list[float] = []
        self.away_after: list[float] = []
        self.snapshot_times: list[int] = []
        self.snapshots: list[dict[PlayerId, float]] = []

    def __len__(self) -> int:
        return len(self.times)

    def diff_array(self) -> np.ndarray:
        return np.asarray(self.diffs, dtype=float)

    def time_array(self) -> np.ndarray:
        return np.asarray(self.times, dtype=int)

    def player_series(self, player: PlayerId) -> np.ndarray:
        """Skills of one player after each of their own matches, in order."""
        if not self.options.participants:
            raise InvalidInputError("trajectory was recorded without participant series")
        out = []
        for home, away, sh, sa in zip(self.homes, self.aways, self.home_after, self.away_after):
            if home == player:
                out.append(sh)
            elif away == player:
                out.append(sa)
        return np.asarray(out, dtype=float)

    def snapshot_matrix(self, players: Sequence[PlayerId]) -> tuple[np.ndarray, np.ndarray]:
        """Snapshot times and a (n_snapshots, n_players) skill matrix."""
        times = np.asarray(self.snapshot_times, dtype=int)
        matrix = np.asarray(
            [[snap[p] for p in players] for snap in self.snapshots], dtype=float
        )
        return times, matrix


def _apply_updates(
    state: SkillState,
    matches: Iterable[MatchRecord],
    trajectory: Trajectory | None,
) -> SkillState:
    config = state.config
    g = _expected_score_fn(config)
    delta = config.scores.delta
    levels = len(delta)
    scale = config.scale
    hfa = config.hfa
    init = config.initial_skill
    skills = state.skills
    counts = state.match_counts
    sums = state.step_sums

    record = trajectory is not None
    if record:
        opts = trajectory.options
        stride = opts.stride
        participants = opts.participants
        times = trajectory.times
        diffs = trajectory.diffs
        homes = trajectory.homes
        aways = trajectory.aways
        home_after = trajectory.home_after
        away_after = trajectory.away_after

    last_t = None
    k = 0
    final_t = None
    for rec in matches:
        t = rec.t
        if last_t is not None and t < last_t:
            raise InvalidInputError(f"match sequence out of order at t={t} (previous {last_t})")
        last_t = t
        y = rec.outcome
        if y >= levels:
            raise InvalidInputError(f"match {t}: outcome index {y} outside [0, {levels})")
        i = rec.home
        j = rec.away
        if i not in skills:
            skills[i] = init
            counts[i] = 0
            sums[i] = 0.0
        if j not in skills:
            skills[j] = init
            counts[j] = 0
            sums[j] = 0.0
        ti = skills[i]
        tj = skills[j]
        z = ti - tj
        u = z / scale + (hfa if rec.venue else 0.0)
        change = rec.step * (delta[y] - g(u))
        ti += change
        tj -= change
        skills[i] = ti
        skills[j] = tj
        counts[i] += 1
        counts[j] += 1
        sums[i] += rec.step
        sums[j] += rec.step
        if record:
            times.append(t)
            diffs.append(z)
            if participants:
                homes.append(i)
                aways.append(j)
                home_after.append(ti)
                away_after.append(tj)
            k += 1
            if k % stride == 0:
                trajectory.snapshot_times.append(t)
                trajectory.snapshots.append(dict(skills))
                final_t = None
            else:
                final_t = t
    if record and final_t is not None:
        trajectory.snapshot_times.append(final_t)
        trajectory.snapshots.append(dict(skills))
    return state


def apply_update(state: SkillState, match: MatchRecord) -> SkillState:
    """Apply one update in place (Elo or G-Elo per the configuration)."""
    return _apply_updates(state, (match,), None)


def elo_update(state: SkillState, match: MatchRecord) -> SkillState:
    """One multilevel Elo update; the configuration must use an Elo expected score."""
    if state.config.is_gelo:
        raise InvalidInputError("state is configured for G-Elo; use gelo_update")
    return _apply_updates(state, (match,), None)


def gelo_update(state: SkillState, match: MatchRecord) -> SkillState:
    """One G-Elo update (AC expected score)."""
    if not state.config.is_gelo:
        raise InvalidInputError("state is configured for Elo; use elo_update")
    return _apply_updates(state, (match,), None)


def run_matches(
    state: SkillState,
    matches: Iterable[MatchRecord],
    record: TrajectoryOptions | bool | None = None,
) -> tuple[SkillState, Trajectory | None]:
    """Apply a match sequence in order, optionally recording the trajectory.

    The sequence indices must be non-decreasing.  Returns the (mutated) state
    and the trajectory, or ``None`` when recording was not requested.
    """
    if record is True:
        options: TrajectoryOptions | None = TrajectoryOptions()
    elif record is False:
        options = None
    else:
        options = record
    trajectory = Trajectory(options) if options is not None else None
    _apply_updates(state, matches, trajectory)
    return state, trajectory


class RatingSystem(BaseEstimator):
    """Estimator-style front end to the rating engine.

    ``fit`` consumes an ordered match sequence and learns ``state_`` (and
    ``trajectory_`` when recording is requested); ``partial_fit`` continues an
    existing run.  ``predict_proba`` exposes the *coupled* outcome model the
    update rule itself implies — exact for binary/logistic Elo and for G-Elo,
    and the uniform-score equivalence for multilevel logistic Elo.  For a
    prediction model identified from data, see
    :class:`elokit.identify.ACModelIdentifier`.
    """

    def __init__(self, config: EngineConfig | None = None):
        self.config = config

    def _config(self) -> EngineConfig:
        if self.config is None:
            raise InvalidInputError("RatingSystem needs an EngineConfig")
        return self.config

    def fit(self, matches: Iterable[MatchRecord], record: TrajectoryOptions | bool | None = None):
        self.state_ = SkillState(self._config())
        _, self.trajectory_ = run_matches(self.state_, matches, record)
        return self

    def partial_fit(self, matches: Iterable[MatchRecord] | MatchRecord):
        if not hasattr(self, "state_"):
            self.state_ = SkillState(self._config())
            self.trajectory_ = None
        if isinstance(matches, MatchRecord):
            matches = (matches,)
        run_matches(self.state_, matches, None)
        return self

    def skills(self) -> dict[PlayerId, float]:
        return self.state_.snapshot()

    def expected_score(self, home: PlayerId, away: PlayerId, venue: int = 1) -> float:
        """Expected outcome score of `home` against `away` under the engine's model."""
        check_flag("venue", venue)
        config = self._config()
        z = skill_diff(self.state_, home, away)
        u = z / config.scale + config.hfa * venue
        return _expected_score_fn(config)(u)

    def predict_proba(self, home: PlayerId, away: PlayerId, venue: int = 1) -> np.ndarray:
        """Outcome probabilities under the model coupled to the update rule."""
        check_flag("venue", venue)
        config = self._config()
        z = skill_diff(self.state_, home, away)
        levels = config.scores.levels
        if config.is_gelo:
            u = z / config.scale + config.hfa * venue
            return ac_table(config.algorithm.alpha, config.scores.delta, u)[0]
        algo = config.algorithm
        if algo.kind == "logistic":
            if not np.allclose(config.scores.delta, OutcomeScale.uniform(levels).delta):
                raise InvalidInputError(
                    "multilevel Elo with non-uniform scores implies no probability model; "
                    "identify a prediction model instead"
                )
            # uniform scores: Elo at scale s is the binomial AC model at s / (L - 1)
            u = (levels - 1) * z / config.scale + config.hfa * venue
            alpha = tuple(math.log(math.comb(levels - 1, y)) for y in range(levels))
            return ac_table(alpha, config.scores.delta, u)[0]
        if levels != 2:
            raise InvalidInputError(
                f"{algo.kind} expected score implies no multilevel probability model"
            )
        p1 = self.expected_score(home, away, venue)
        return np.array([1.0 - p1, p1])
