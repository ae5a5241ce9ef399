"""Closed-form convergence and estimation-noise analysis for stochastic-gradient ratings.

After convergence, a constant-step update with scale ``s`` and step ``K``
leaves an estimation variance of roughly ``s * K / 2`` in each skill, and
the expected skill approaches its limit exponentially with time constant
``tau = 4 s / K`` (counted in matches played by the player).  This module
provides those formulas, per-player convergence reports built on the
average step, the superiority probability for noisy skill comparisons, and
the Gaussian-marginalisation identities behind the noise-corrected
("effective") scale and home advantage used for prediction.

Everything here is a pure computation; the Monte-Carlo checks live in the
test-suite and in :mod:`elokit.simulate`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np
from scipy import integrate

from ._validation import check_finite, check_nonnegative, check_positive
from .exceptions import InvalidInputError
from .engine import MatchRecord, SkillState
from .outcomes import (
    BETA_LOGISTIC_TO_GAUSSIAN_DERIVATIVE,
    gaussian_cdf,
    logistic,
)

__all__ = [
    "NoiseModel",
    "EffectiveParams",
    "Gaussian",
    "PlayerConvergence",
    "ConvergenceReport",
    "asymptotic_variance",
    "time_constant",
    "expected_trajectory",
    "convergence_report",
    "temporal_variance",
    "superiority_probability",
    "noise_ratio",
    "effective_params",
    "posterior_true_diff",
    "gaussian_cdf_expectation",
    "marginalized_win_prob",
]


def asymptotic_variance(scale: float, step: float) -> float:
    """Estimation variance of a converged skill, ``s * K / 2`` (rating points squared)."""
    check_positive("scale", scale)
    check_nonnegative("step", step)
    return scale * step / 2.0


def time_constant(scale: float, step: float, players: int | None = None,
                  clock: str = "player") -> float:
    """Convergence time constant ``tau = 4 s / K``.

    By default ``tau`` counts matches played by the player.  With
    ``clock='global'`` it is converted to ticks of a global match counter in
    a tournament where each of ``players`` participants waits on average
    ``players / 2`` matches between appearances.
    """
    check_positive("scale", scale)
    check_positive("step", step)
    tau = 4.0 * scale / step
    if clock == "player":
        return tau
    if clock == "global":
        if players is None or players < 2:
            raise InvalidInputError("global clock needs the number of players (>= 2)")
        return tau * players / 2.0
    raise InvalidInputError(f"unknown clock {clock!r}; expected 'player' or 'global'")


def expected_trajectory(theta0: float, theta_inf: float, tau: float, t):
    """Expected skill after ``t`` of the player's matches: exponential approach to the limit."""
    check_finite("theta0", theta0)
    check_finite("theta_inf", theta_inf)
    check_positive("tau", tau)
    t = np.asarray(t, dtype=float)
    out = np.exp(-t / tau) * (theta0 - theta_inf) + theta_inf
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# per-player convergence reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlayerConvergence:
    player: object
    n_matches: int
    mean_step: float
    time_constant: float
    lambda_elapsed: float  # elapsed time constants, n_matches / tau


@dataclass(frozen=True)
class ConvergenceReport:
    """Per-player convergence status plus the global noise level."""

    players: tuple[PlayerConvergence, ...]
    scale: float
    mean_variance: float  # average of s * K_mean / 2 over players
    frac_at_least_one_tau: float
    frac_at_least_two_tau: float

    def lambda_cdf(self) -> list[tuple[float, float]]:
        """Cumulative distribution points (lambda, fraction of players <= lambda)."""
        values = sorted(p.lambda_elapsed for p in self.players)
        n = len(values)
        return [(lam, (idx + 1) / n) for idx, lam in enumerate(values)]

    def to_json_dict(self) -> dict:
        return {
            "scale": self.scale,
            "mean_variance": self.mean_variance,
            "frac_at_least_one_tau": self.frac_at_least_one_tau,
            "frac_at_least_two_tau": self.frac_at_least_two_tau,
            "players": [
                {
                    "player": str(p.player),
                    "n_matches": p.n_matches,
                    "mean_step": p.mean_step,
                    "time_constant": p.time_constant if math.isfinite(p.time_constant) else None,
                    "lambda": p.lambda_elapsed,
                }
                for p in self.players
            ],
        }


def convergence_report(source: SkillState | Iterable[MatchRecord],
                       scale: float | None = None) -> ConvergenceReport:
    """Build a convergence report from a rating state or a raw match log.

    Players with no matches are reported with ``lambda = 0`` and an infinite
    time constant.
    """
    if isinstance(source, SkillState):
        used_scale = source.config.scale
        counts = dict(source.match_counts)
        sums = dict(source.step_sums)
    else:
        if scale is None:
            raise InvalidInputError("a match log needs an explicit scale")
        used_scale = check_positive("scale", scale)
        counts = {}
        sums = {}
        for rec in source:
            for p in (rec.home, rec.away):
                counts[p] = counts.get(p, 0) + 1
                sums[p] = sums.get(p, 0.0) + rec.step
    if not counts:
        raise InvalidInputError("no players to report on")

    rows = []
    variances = []
    for player in counts:
        n = counts[player]
        if n == 0:
            rows.append(PlayerConvergence(player, 0, 0.0, math.inf, 0.0))
            variances.append(0.0)
            continue
        mean_step = sums[player] / n
        tau = 4.0 * used_scale / mean_step
        rows.append(PlayerConvergence(player, n, mean_step, tau, n / tau))
        variances.append(used_scale * mean_step / 2.0)
    n_players = len(rows)
    return ConvergenceReport(
        players=tuple(rows),
        scale=used_scale,
        mean_variance=float(np.mean(variances)),
        frac_at_least_one_tau=sum(r.lambda_elapsed >= 1.0 for r in rows) / n_players,
        frac_at_least_two_tau=sum(r.lambda_elapsed >= 2.0 for r in rows) / n_players,
    )


def temporal_variance(trajectory, player, window: int) -> tuple[float, float]:
    """Windowed variance and mean of a player's skill over their last `window` matches.

    The trajectory must have been recorded with participant series (see
    :class:`elokit.engine.TrajectoryOptions`).  Uses population (1 / W)
    normalisation.  Returns ``(variance, mean)``.
    """
    if window < 1:
        raise InvalidInputError("window must be >= 1")
    series = trajectory.player_series(player)
    if len(series) < window:
        raise InvalidInputError(
            f"player {player!r} has only {len(series)} recorded matches; window is {window}"
        )
    tail = series[-window:]
    mean = float(np.mean(tail))
    variance = float(np.mean((tail - mean) ** 2))
    return variance, mean


# ---------------------------------------------------------------------------
# noise model and effective prediction parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseModel:
    """Noise levels entering the effective-scale correction.

    Attributes
    ----------
    estimation_variance : float
        Variance of the skill estimates after convergence (``s * K / 2`` for
        a constant step), in rating points squared.
    skill_variance : float
        Dispersion of the true skills, per player, at the engine scale.  When
        skills are generated at scale ``s*`` with variance ``v``, the value at
        engine scale ``s`` is ``v * (s / s*)**2``.
    scale : float
        Engine scale ``s``.
    gaussian_factor : float
        Logistic-to-Gaussian factor used inside the correction; defaults to
        the derivative-matching constant, the moment variant is accepted too.
    """

    estimation_variance: float
    skill_variance: float
    scale: float
    gaussian_factor: float = BETA_LOGISTIC_TO_GAUSSIAN_DERIVATIVE

    def __post_init__(self) -> None:
        check_nonnegative("estimation_variance", self.estimation_variance)
        check_positive("skill_variance", self.skill_variance)
        check_positive("scale", self.scale)
        check_positive("gaussian_factor", self.gaussian_factor)

    @classmethod
    def from_step(
        cls,
        scale: float,
        step: float,
        skill_variance: float,
        generator_scale: float = 1.0,
        gaussian_factor: float = BETA_LOGISTIC_TO_GAUSSIAN_DERIVATIVE,
    ) -> "NoiseModel":
        """Noise model for a converged constant-step run.

        `skill_variance` is given at `generator_scale` and rescaled to the
        engine scale.
        """
        check_positive("generator_scale", generator_scale)
        return cls(
            estimation_variance=asymptotic_variance(scale, step),
            skill_variance=skill_variance * (scale / generator_scale) ** 2,
            scale=scale,
            gaussian_factor=gaussian_factor,
        )


def noise_ratio(estimation_variance: float, skill_variance: float) -> float:
    """Shrinkage ratio ``a = 1 + v_est / v_skill`` (>= 1)."""
    check_nonnegative("estimation_variance", estimation_variance)
    check_positive("skill_variance", skill_variance)
    return 1.0 + estimation_variance / skill_variance


class EffectiveParams(NamedTuple):
    scale: float
    hfa: float
    beta_err: float


def effective_params(eta: float, noise: NoiseModel) -> EffectiveParams:
    """Noise-corrected scale and home advantage for prediction.

    With ``a = 1 + v_est / v_skill``::

        beta_err = a * sqrt(1 + 2 v_est / (a (s b)^2))     (b: logistic->Gaussian factor)
        s_hat    = s * beta_err
        eta_hat  = eta * a / beta_err

    ``beta_err >= 1`` always, with equality exactly when the estimation
    variance vanishes; the product ``eta_hat * s_hat = eta * a * s``.
    """
    check_finite("eta", eta)
    a = noise_ratio(noise.estimation_variance, noise.skill_variance)
    sb = noise.scale * noise.gaussian_factor
    beta_err = a * math.sqrt(1.0 + 2.0 * noise.estimation_variance / (a * sb * sb))
    return EffectiveParams(noise.scale * beta_err, eta * a / beta_err, beta_err)


def superiority_probability(z: float, estimation_variance: float) -> float:
    """Probability that the truly better player is ahead given observed difference ``z``.

    Under i.i.d. Gaussian estimation errors of variance ``v`` on each skill,
    ``P(z* > 0 | z > 0) = Phi(z / sqrt(2 v))``.
    """
    check_finite("z", z)
    check_nonnegative("estimation_variance", estimation_variance)
    if estimation_variance == 0.0:
        return 0.5 if z == 0.0 else float(z > 0.0)
    return gaussian_cdf(z / math.sqrt(2.0 * estimation_variance))


class Gaussian(NamedTuple):
    mean: float
    variance: float


def posterior_true_diff(z: float, noise: NoiseModel) -> Gaussian:
    """Posterior of the true skill difference given the estimated one.

    Multiplying the Gaussians ``N(z; z*, 2 v_est)`` and ``N(z*; 0, 2 v_skill)``
    gives ``z* | z ~ N(z / a, 2 v_est / a)`` — the observed difference shrinks
    toward zero by the noise ratio ``a``.
    """
    check_finite("z", z)
    a = noise_ratio(noise.estimation_variance, noise.skill_variance)
    return Gaussian(z / a, 2.0 * noise.estimation_variance / a)


def gaussian_cdf_expectation(b: float, y: float, z: float, q: float) -> float:
    """Closed form of ``int Phi((x + z) / b) N(x; y, q^2) dx``.

    Equals ``Phi((y + z) / sqrt(b^2 + q^2))``; the identity behind the
    effective-scale correction.
    """
    check_positive("b", b)
    check_finite("y", y)
    check_finite("z", z)
    check_nonnegative("q", q)
    return gaussian_cdf((y + z) / math.hypot(b, q))


def marginalized_win_prob(
    z: float, eta: float, noise: NoiseModel, method: str = "closed-form"
) -> float:
    """Home-win probability marginalised over the estimation noise (binary model).

    The default closed form is ``logistic(z / s_hat + eta_hat)`` with the
    effective parameters; ``method='quadrature'`` integrates the nominal
    logistic against the posterior of the true difference instead, as a
    validation path.
    """
    check_finite("z", z)
    check_finite("eta", eta)
    if method == "closed-form":
        scale_hat, eta_hat, _ = effective_params(eta, noise)
        return logistic(z / scale_hat + eta_hat)
    if method != "quadrature":
        raise InvalidInputError(f"unknown method {method!r}")
    if noise.estimation_variance == 0.0:
        return logistic(z / noise.scale + eta)
    mean, variance = posterior_true_diff(z, noise)
    sigma = math.sqrt(variance)

    def integrand(x: float) -> float:
        return logistic(x / noise.scale + eta) * math.exp(-0.5 * ((x - mean) / sigma) ** 2)

    lo, hi = mean - 12.0 * sigma, mean + 12.0 * sigma
    value, _ = integrate.quad(integrand, lo, hi, limit=200)
    return value / (sigma * math.sqrt(2.0 * math.pi))
