"""Outcome probability models for rating systems, and the conversions between their scales.

The central object is the adjacent-categories (AC) ordinal model over L ordered
match outcomes y = 0..L-1::

    P_y(u) = exp(alpha_y + delta_y * u) / sum_l exp(alpha_l + delta_l * u)

where ``u = z / s + eta * h`` combines the skill difference ``z`` (in rating
points), the scale ``s``, the home-advantage shift ``eta`` and the venue flag
``h``.  The binary special case (L = 2, alpha = 0) is exactly the logistic
model used by canonical Elo ratings.  Expected scores, log-likelihoods and
their derivatives are provided alongside the closed-form scale-conversion
factors that translate between the canonical logistic expected score, bases
other than e, the Gaussian CDF, and the AC expected score.

All functions are pure and accept scalars or 1-D arrays for the skill
difference; they are safe for unrestricted concurrent use.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np
from scipy import special

from ._validation import (
    check_finite,
    check_finite_array,
    check_outcome_index,
    check_positive,
    check_probability,
)
from .exceptions import InvalidInputError

__all__ = [
    "ARG_LIMIT",
    "OutcomeScale",
    "ACParams",
    "AsymmetricModelWarning",
    "ConversionKind",
    "ScaleConversion",
    "RescaledHfa",
    "logistic",
    "logit",
    "gaussian_cdf",
    "ac_prob",
    "ac_expected_score",
    "ac_log_likelihood",
    "ac_score_residual",
    "ac_score_variance",
    "ac_table",
    "ac_log_table",
    "ac_mean_var",
    "binomial_ac_params",
    "expand_symmetric_alpha",
    "beta_ac_to_logistic",
    "beta_base_change",
    "beta_logistic_to_gaussian",
    "rescale_hfa",
]

ARG_LIMIT = 700.0
"""Largest model-scale argument ``|u|`` accepted by the probability routines.

Past roughly 709 the underlying ``exp`` underflows straight to 0.0 and the
probabilities are no longer strictly inside (0, 1).  Arguments of this size
mean the caller passed skill differences hundreds of scale units apart, which
is always a bug, so they are rejected rather than silently saturated.
"""

#: Derivative-matching conversion between the canonical logistic expected
#: score and the Gaussian CDF: slopes at 0 agree when the Gaussian scale is
#: multiplied by 4 / sqrt(2 pi) ~= 1.596.
BETA_LOGISTIC_TO_GAUSSIAN_DERIVATIVE = 4.0 / math.sqrt(2.0 * math.pi)

#: Moment-matching variant: equates the variances of the logistic and normal
#: distributions, pi / sqrt(3) ~= 1.814.
BETA_LOGISTIC_TO_GAUSSIAN_MOMENT = math.pi / math.sqrt(3.0)


class AsymmetricModelWarning(UserWarning):
    """An AC model was built whose parameters break home/away symmetry."""


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OutcomeScale:
    """Ordered outcome space: L levels with scores ``delta_0 = 0 < ... < delta_{L-1} = 1``."""

    delta: tuple[float, ...]

    def __post_init__(self) -> None:
        delta = tuple(float(d) for d in self.delta)
        object.__setattr__(self, "delta", delta)
        if len(delta) < 2:
            raise InvalidInputError("an outcome scale needs at least 2 levels")
        check_finite_array("delta", delta)
        if delta[0] != 0.0 or delta[-1] != 1.0:
            raise InvalidInputError("outcome scores must start at 0 and end at 1")
        if any(b <= a for a, b in zip(delta, delta[1:])):
            raise InvalidInputError("outcome scores must be strictly increasing")

    @classmethod
    def uniform(cls, levels: int) -> "OutcomeScale":
        """Uniformly spaced scores ``y / (L - 1)``, the multilevel-Elo default."""
        if levels < 2:
            raise InvalidInputError("levels must be >= 2")
        return cls(tuple(y / (levels - 1) for y in range(levels)))

    @property
    def levels(self) -> int:
        return len(self.delta)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.delta, dtype=float)

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        """True when ``delta_y = 1 - delta_{L-1-y}`` for every level."""
        return all(abs(d + dm - 1.0) <= tol for d, dm in zip(self.delta, reversed(self.delta)))


@dataclass(frozen=True)
class ACParams:
    """Full parameterisation of the AC outcome model.

    Attributes
    ----------
    scale : float
        Rating-point scale ``s`` dividing skill differences.
    hfa : float
        Scale-free home-advantage shift ``eta`` added to ``z / s`` on home venues.
    alpha : tuple of float
        Per-level bias terms; ``alpha_0 = alpha_{L-1} = 0`` by convention.
    scores : OutcomeScale
        Outcome scores ``delta`` shared with the rating update.
    """

    scale: float
    hfa: float
    alpha: tuple[float, ...]
    scores: OutcomeScale

    def __post_init__(self) -> None:
        check_positive("scale", self.scale)
        check_finite("hfa", self.hfa)
        alpha = tuple(float(a) for a in self.alpha)
        object.__setattr__(self, "alpha", alpha)
        check_finite_array("alpha", alpha)
        if len(alpha) != self.scores.levels:
            raise InvalidInputError(
                f"alpha has {len(alpha)} entries but the outcome scale has "
                f"{self.scores.levels} levels"
            )
        if alpha[0] != 0.0 or alpha[-1] != 0.0:
            raise InvalidInputError("alpha_0 and alpha_{L-1} must be 0")
        if not self.is_symmetric:
            warnings.warn(
                "AC parameters are not home/away symmetric; outcome-symmetry "
                "guarantees do not hold",
                AsymmetricModelWarning,
                stacklevel=2,
            )

    @property
    def levels(self) -> int:
        return self.scores.levels

    @property
    def delta(self) -> tuple[float, ...]:
        return self.scores.delta

    @property
    def is_symmetric(self) -> bool:
        alpha_ok = all(
            abs(a - am) <= 1e-12 for a, am in zip(self.alpha, reversed(self.alpha))
        )
        return alpha_ok and self.scores.is_symmetric()

    @classmethod
    def symmetric(
        cls,
        scale: float,
        hfa: float,
        scores: OutcomeScale,
        free_alpha: Sequence[float] = (),
    ) -> "ACParams":
        """Build from the free parameters ``alpha_1 .. alpha_{ceil((L-2)/2)}``."""
        alpha = expand_symmetric_alpha(scores.levels, free_alpha)
        return cls(scale=scale, hfa=hfa, alpha=alpha, scores=scores)

    @classmethod
    def binary(cls, scale: float, hfa: float = 0.0) -> "ACParams":
        """The logistic model: L = 2, no free parameters."""
        return cls(scale=scale, hfa=hfa, alpha=(0.0, 0.0), scores=OutcomeScale.uniform(2))

    def to_json_dict(self) -> dict:
        return {
            "L": self.levels,
            "s": self.scale,
            "eta": self.hfa,
            "alpha": list(self.alpha),
            "delta": list(self.delta),
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "ACParams":
        try:
            levels = int(payload["L"])
            scale = float(payload["s"])
            eta = float(payload["eta"])
            alpha = tuple(float(a) for a in payload["alpha"])
            delta = tuple(float(d) for d in payload["delta"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed AC-parameter object: {exc}") from exc
        if levels != len(alpha) or levels != len(delta):
            raise InvalidInputError("L does not match the alpha/delta lengths")
        return cls(scale=scale, hfa=eta, alpha=alpha, scores=OutcomeScale(delta))


def expand_symmetric_alpha(levels: int, free_alpha: Sequence[float]) -> tuple[float, ...]:
    """Expand free parameters into a full symmetric alpha vector.

    The free entries are ``alpha_1 .. alpha_m`` with ``m = ceil((L - 2) / 2)``;
    mirrors are tied (``alpha_y = alpha_{L-1-y}``) and the boundary entries
    are pinned to 0.
    """
    n_free = n_free_alpha(levels)
    free = [float(a) for a in free_alpha]
    if len(free) != n_free:
        raise InvalidInputError(
            f"{levels}-level symmetric model has {n_free} free alpha entries, got {len(free)}"
        )
    alpha = [0.0] * levels
    for k, value in enumerate(free, start=1):
        alpha[k] = value
        alpha[levels - 1 - k] = value
    return tuple(alpha)


def n_free_alpha(levels: int) -> int:
    """Number of free alpha entries under symmetry: ``ceil((L - 2) / 2)``."""
    if levels < 2:
        raise InvalidInputError("levels must be >= 2")
    return (levels - 1) // 2


# ---------------------------------------------------------------------------
# elementary expected-score functions
# ---------------------------------------------------------------------------


def _as_argument(z, *, limit: float = ARG_LIMIT):
    """Validate a model-scale argument; returns (array, was_scalar)."""
    arr = np.atleast_1d(np.asarray(z, dtype=float))
    if arr.ndim != 1:
        raise InvalidInputError("skill differences must be scalar or 1-D")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("argument must be finite")
    if np.any(np.abs(arr) > limit):
        raise InvalidInputError(f"argument magnitude exceeds the supported limit {limit:g}")
    return arr, np.isscalar(z) or np.ndim(z) == 0


def logistic(z):
    """Canonical logistic function ``1 / (1 + exp(-z))``.

    Stable on both tails: the exponential is only ever taken of a
    non-positive number.
    """
    arr, scalar = _as_argument(z)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ez = np.exp(arr[~pos])
    out[~pos] = ez / (1.0 + ez)
    return float(out[0]) if scalar else out


def logit(p):
    """Inverse logistic, ``log(p / (1 - p))`` for p strictly inside (0, 1)."""
    p = check_probability("p", p, open_interval=True)
    return math.log(p) - math.log1p(-p)


def gaussian_cdf(z):
    """Standard normal CDF."""
    arr, scalar = _as_argument(z, limit=math.inf)
    if scalar:
        return float(special.ndtr(arr[0]))
    return special.ndtr(arr)


# ---------------------------------------------------------------------------
# AC model: probabilities, expected score, log-likelihood
# ---------------------------------------------------------------------------


def ac_table(alpha, delta, u) -> np.ndarray:
    """Outcome probabilities of the AC model at model-scale arguments ``u``.

    Parameters
    ----------
    alpha, delta : array-like, shape (L,)
    u : array-like, shape (n,)

    Returns
    -------
    ndarray, shape (n, L)
        Each row is a probability vector, computed with max-subtracted
        exponentials so arbitrary argument magnitudes cannot overflow.
    """
    alpha = np.asarray(alpha, dtype=float)
    delta = np.asarray(delta, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    w = alpha[None, :] + np.multiply.outer(u, delta)
    w -= w.max(axis=1, keepdims=True)
    p = np.exp(w)
    p /= p.sum(axis=1, keepdims=True)
    return p


def ac_log_table(alpha, delta, u) -> np.ndarray:
    """Log-probabilities of the AC model, computed in log space.

    Never takes the log of a rounded probability, so small tail
    probabilities keep full relative precision.
    """
    alpha = np.asarray(alpha, dtype=float)
    delta = np.asarray(delta, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    w = alpha[None, :] + np.multiply.outer(u, delta)
    m = w.max(axis=1, keepdims=True)
    lse = m + np.log(np.exp(w - m).sum(axis=1, keepdims=True))
    return w - lse


def ac_mean_var(alpha, delta, u) -> tuple[np.ndarray, np.ndarray]:
    """Expected score and score variance of the AC model at arguments ``u``.

    The variance equals the derivative of the expected score in ``u``.
    """
    delta = np.asarray(delta, dtype=float)
    p = ac_table(alpha, delta, u)
    mean = p @ delta
    var = p @ (delta * delta) - mean * mean
    return mean, var


def _model_argument(params: ACParams, z, venue):
    z_arr, scalar = _as_argument(z, limit=ARG_LIMIT * params.scale)
    venue_arr = np.atleast_1d(np.asarray(venue))
    if not np.all(np.isin(venue_arr, (0, 1))):
        raise InvalidInputError("venue flag must be 0 or 1")
    u = z_arr / params.scale + params.hfa * venue_arr.astype(float)
    if np.any(np.abs(u) > ARG_LIMIT):
        raise InvalidInputError(f"model argument magnitude exceeds the limit {ARG_LIMIT:g}")
    return u, scalar and venue_arr.size == 1


def ac_prob(params: ACParams, y: int, z, venue=0):
    """Probability of outcome ``y`` given skill difference ``z`` (rating points)."""
    check_outcome_index(y, params.levels)
    u, scalar = _model_argument(params, z, venue)
    out = ac_table(params.alpha, params.delta, u)[:, y]
    return float(out[0]) if scalar else out


def ac_expected_score(params: ACParams, z, venue=0):
    """Expected outcome score ``sum_y delta_y P_y``; strictly increasing in ``z``."""
    u, scalar = _model_argument(params, z, venue)
    mean, _ = ac_mean_var(params.alpha, params.delta, u)
    return float(mean[0]) if scalar else mean


def ac_log_likelihood(params: ACParams, y: int, z, venue=0):
    """Log-probability of outcome ``y``, evaluated in log space."""
    check_outcome_index(y, params.levels)
    u, scalar = _model_argument(params, z, venue)
    out = ac_log_table(params.alpha, params.delta, u)[:, y]
    return float(out[0]) if scalar else out


def ac_score_residual(params: ACParams, y: int, z, venue=0):
    """Score residual ``delta_y - expected score``: the log-likelihood derivative in ``u``."""
    check_outcome_index(y, params.levels)
    g = ac_expected_score(params, z, venue)
    return params.delta[y] - g


def ac_score_variance(params: ACParams, z, venue=0):
    """Variance of the score under the model: the derivative of the expected score in ``u``."""
    u, scalar = _model_argument(params, z, venue)
    _, var = ac_mean_var(params.alpha, params.delta, u)
    return float(var[0]) if scalar else var


def binomial_ac_params(levels: int, scale: float = 1.0, hfa: float = 0.0) -> ACParams:
    """The unique AC model equivalent to multilevel Elo with uniform scores.

    ``alpha_y = log C(L-1, y)`` and ``delta_y = y / (L-1)``; its expected
    score equals the logistic at scale ``s * (L - 1)`` exactly.
    """
    if levels < 2:
        raise InvalidInputError("levels must be >= 2")
    alpha = tuple(math.log(math.comb(levels - 1, y)) for y in range(levels))
    return ACParams(scale=scale, hfa=hfa, alpha=alpha, scores=OutcomeScale.uniform(levels))


# ---------------------------------------------------------------------------
# scale conversions
# ---------------------------------------------------------------------------


class ConversionKind(str, Enum):
    BASE_CHANGE = "base-change"
    LOGISTIC_TO_GAUSSIAN_DERIVATIVE = "logistic-to-gaussian-derivative"
    LOGISTIC_TO_GAUSSIAN_MOMENT = "logistic-to-gaussian-moment"
    AC_TO_LOGISTIC = "ac-to-logistic"
    ERROR_CORRECTION = "error-correction"


@dataclass(frozen=True)
class ScaleConversion:
    """A positive factor ``beta`` turning scale ``s`` into ``s * beta``."""

    factor: float
    kind: ConversionKind

    def __post_init__(self) -> None:
        check_positive("conversion factor", self.factor)

    def apply(self, scale: float) -> float:
        return check_positive("scale", scale) * self.factor

    @property
    def inverse(self) -> float:
        return 1.0 / self.factor


def beta_base_change(base: float) -> ScaleConversion:
    """Scale factor replacing the canonical logistic by one with exponent base ``a``.

    ``L(z / (s ln a); a) = L(z / s)``, so the factor is ``ln a``.  Bases below
    1 would flip the expected score's monotonicity (the factor would be
    negative), so only ``a > 1`` is accepted.
    """
    base = check_finite("base", base)
    if base <= 1.0:
        raise InvalidInputError("exponent base must be > 1")
    return ScaleConversion(math.log(base), ConversionKind.BASE_CHANGE)


def beta_logistic_to_gaussian(method: str = "derivative") -> ScaleConversion:
    """Scale factor approximating the logistic by the Gaussian CDF.

    ``method='derivative'`` matches the slopes at 0 (4 / sqrt(2 pi), the
    default used throughout the noise corrections); ``method='moment'``
    matches the distribution variances (pi / sqrt(3)).
    """
    if method == "derivative":
        return ScaleConversion(
            BETA_LOGISTIC_TO_GAUSSIAN_DERIVATIVE,
            ConversionKind.LOGISTIC_TO_GAUSSIAN_DERIVATIVE,
        )
    if method == "moment":
        return ScaleConversion(
            BETA_LOGISTIC_TO_GAUSSIAN_MOMENT, ConversionKind.LOGISTIC_TO_GAUSSIAN_MOMENT
        )
    raise InvalidInputError(f"unknown method {method!r}; expected 'derivative' or 'moment'")


def beta_ac_to_logistic(params: ACParams) -> ScaleConversion:
    """Scale factor replacing the AC expected score by the canonical logistic.

    Matches the derivatives at ``u = 0``::

        beta = [4 * (sum_l delta_l^2 e^{alpha_l}) / (sum_l e^{alpha_l}) - 1]^{-1}

    For the binomial parameters this is exactly ``L - 1`` and the replacement
    is exact everywhere, not just at 0.
    """
    if not params.is_symmetric:
        raise InvalidInputError("the AC-to-logistic factor requires a symmetric model")
    alpha = np.asarray(params.alpha)
    delta = np.asarray(params.delta)
    ea = np.exp(alpha - alpha.max())
    denominator = 4.0 * float((delta * delta) @ ea) / float(ea.sum()) - 1.0
    if denominator <= 0.0:
        raise InvalidInputError("degenerate score variance; cannot match slopes")
    return ScaleConversion(1.0 / denominator, ConversionKind.AC_TO_LOGISTIC)


class RescaledHfa(NamedTuple):
    eta: float
    rule: str


def rescale_hfa(eta: float, conversion) -> RescaledHfa:
    """Home-advantage term after a change of scale by ``beta``.

    The product ``eta * s`` is what the rating update feels, so it is
    preserved: ``eta_new = eta / beta`` while ``s_new = s * beta``.
    """
    eta = check_finite("eta", eta)
    beta = conversion.factor if isinstance(conversion, ScaleConversion) else float(conversion)
    check_positive("conversion factor", beta)
    return RescaledHfa(eta / beta, "eta*s preserved")
