"""Identification of the prediction model from outcomes and ranking-produced skills.

The ranking recursion and the prediction model are deliberately decoupled:
whatever update produced the skill differences ``z_t``, the parameters used
for prediction — AC biases ``alpha``, home advantage ``eta`` and the scale
factor ``beta`` (fitted as ``gamma = 1 / beta`` for concavity) — are
estimated from the observed ``(z_t, y_t, h_t)`` triples.  Three routes are
provided, ordered by increasing use of the data:

* closed forms from outcome frequencies (:func:`simple_alpha`,
  :func:`simple_eta`, :func:`simple_beta`);
* batch maximum likelihood with any subset of parameters frozen
  (:func:`fit_full`, :func:`fit_binary`);
* on-line mini-batch adaptation of the scale factor alone
  (:func:`online_gamma`).

Batch gradients are plain sums over samples, so fits are deterministic for a
fixed sample order; the on-line route is inherently sequential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_finite, check_nonnegative, check_positive
from .exceptions import ConvergenceError, DegenerateDataError, InvalidInputError
from .outcomes import (
    ACParams,
    OutcomeScale,
    ac_log_table,
    ac_mean_var,
    ac_table,
    beta_ac_to_logistic,
    expand_symmetric_alpha,
    logit,
    n_free_alpha,
)

__all__ = [
    "MatchSamples",
    "OutcomeFrequencies",
    "IdentifiedModel",
    "FitConstraints",
    "GammaTrace",
    "outcome_frequencies",
    "simple_alpha",
    "simple_eta",
    "simple_beta",
    "fit_binary",
    "fit_full",
    "online_gamma",
    "ac_total_loglik",
    "ACModelIdentifier",
]


@dataclass(frozen=True)
class MatchSamples:
    """Aligned identification samples: sequence index, skill difference, outcome, venue."""

    t: np.ndarray
    z: np.ndarray
    y: np.ndarray
    h: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=int)
        z = np.asarray(self.z, dtype=float)
        y = np.asarray(self.y, dtype=int)
        h = np.asarray(self.h, dtype=int)
        if not (t.shape == z.shape == y.shape == h.shape) or t.ndim != 1:
            raise InvalidInputError("sample arrays must be 1-D and equally long")
        if not np.all(np.isfinite(z)):
            raise InvalidInputError("skill differences must be finite")
        if y.size and y.min() < 0:
            raise InvalidInputError("outcome indices must be non-negative")
        if not np.all((h == 0) | (h == 1)):
            raise InvalidInputError("venue flags must be 0 or 1")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "h", h)

    def __len__(self) -> int:
        return len(self.t)

    @classmethod
    def from_trajectory(cls, trajectory, matches: Sequence, window=None) -> "MatchSamples":
        """Pair a recorded trajectory with its match sequence.

        ``trajectory.diffs[k]`` must correspond to ``matches[k]``, which holds
        whenever both came from the same :func:`elokit.engine.run_matches`
        call.
        """
        if len(trajectory.diffs) != len(matches):
            raise InvalidInputError("trajectory and match sequence have different lengths")
        samples = cls(
            t=np.asarray([m.t for m in matches]),
            z=trajectory.diff_array(),
            y=np.asarray([m.outcome for m in matches]),
            h=np.asarray([m.venue for m in matches]),
        )
        return samples.window(*window) if window is not None else samples

    @classmethod
    def from_records(cls, matches: Sequence, skill_diffs) -> "MatchSamples":
        """Samples with externally supplied pre-match skill differences."""
        z = np.asarray(skill_diffs, dtype=float)
        if len(z) != len(matches):
            raise InvalidInputError("skill differences and match sequence have different lengths")
        return cls(
            t=np.asarray([m.t for m in matches]),
            z=z,
            y=np.asarray([m.outcome for m in matches]),
            h=np.asarray([m.venue for m in matches]),
        )

    def window(self, start: int, stop: int) -> "MatchSamples":
        """Samples whose sequence index lies in ``[start, stop)``."""
        mask = (self.t >= start) & (self.t < stop)
        return MatchSamples(self.t[mask], self.z[mask], self.y[mask], self.h[mask])


# ---------------------------------------------------------------------------
# outcome frequencies and closed-form estimates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OutcomeFrequencies:
    """Venue-conditional outcome frequencies of a training window.

    ``neutral`` is symmetrised (home/away swap has no meaning on a neutral
    venue), ``overall`` reweights the venue-conditional vectors by the
    home-venue fraction.  ``mean_hfa_score`` is the score average over
    home-venue matches, or ``None`` when there are none.
    """

    overall: tuple[float, ...]
    neutral: tuple[float, ...] | None
    hfa: tuple[float, ...] | None
    hfa_fraction: float
    mean_hfa_score: float | None
    scores: OutcomeScale
    n_matches: int


def outcome_frequencies(
    source: MatchSamples | Iterable, scores: OutcomeScale, smoothing: float = 0.5
) -> OutcomeFrequencies:
    """Empirical outcome frequencies with additive smoothing.

    ``smoothing`` pseudo-counts are added to every (venue, outcome) cell of a
    venue class that has at least one match; it defaults to 0.5 so the
    log-ratio estimate :func:`simple_alpha` stays finite on sparse windows.
    """
    check_nonnegative("smoothing", smoothing)
    levels = scores.levels
    if isinstance(source, MatchSamples):
        y = source.y
        h = source.h
    else:
        records = list(source)
        y = np.asarray([m.outcome for m in records], dtype=int)
        h = np.asarray([m.venue for m in records], dtype=int)
    if y.size == 0:
        raise InvalidInputError("cannot compute frequencies of an empty match set")
    if y.max() >= levels:
        raise InvalidInputError("outcome index outside the outcome scale")

    counts_neut = np.bincount(y[h == 0], minlength=levels).astype(float)
    counts_hfa = np.bincount(y[h == 1], minlength=levels).astype(float)
    n_neut = counts_neut.sum()
    n_hfa = counts_hfa.sum()
    w = n_hfa / (n_neut + n_hfa)

    neutral = None
    if n_neut > 0:
        f = (counts_neut + smoothing) / (n_neut + levels * smoothing)
        neutral = 0.5 * (f + f[::-1])
    hfa = None
    mean_hfa_score = None
    if n_hfa > 0:
        hfa = (counts_hfa + smoothing) / (n_hfa + levels * smoothing)
        mean_hfa_score = float(hfa @ scores.as_array())

    if neutral is None:
        overall = hfa
    elif hfa is None:
        overall = neutral
    else:
        overall = (1.0 - w) * neutral + w * hfa

    return OutcomeFrequencies(
        overall=tuple(float(v) for v in overall),
        neutral=None if neutral is None else tuple(float(v) for v in neutral),
        hfa=None if hfa is None else tuple(float(v) for v in hfa),
        hfa_fraction=float(w),
        mean_hfa_score=mean_hfa_score,
        scores=scores,
        n_matches=int(y.size),
    )


def simple_alpha(freqs: OutcomeFrequencies) -> np.ndarray:
    """Closed-form AC biases from outcome frequencies.

    ``alpha_y = 0.5 * log(P_y P_{L-1-y} / (P_0 P_{L-1}))`` — symmetric by
    construction with the boundary entries pinned at 0.
    """
    p = np.asarray(freqs.overall)
    if np.any(p <= 0.0):
        raise DegenerateDataError(
            "an outcome has zero frequency even after smoothing; alpha is unbounded"
        )
    alpha = 0.5 * np.log(p * p[::-1] / (p[0] * p[-1]))
    alpha[0] = alpha[-1] = 0.0
    return alpha


def simple_eta(freqs: OutcomeFrequencies, alpha, exact: bool = False) -> float:
    """Closed-form home advantage from the mean home-venue score.

    Default: ``logit(mean score) * beta_AC_to_logistic(alpha)``, the logistic
    approximation of the first-order condition.  With ``exact=True`` the
    condition ``expected_score(eta) = mean score`` is solved by bisection
    instead, as a reference path.
    """
    if freqs.mean_hfa_score is None:
        raise DegenerateDataError("home advantage requires home-venue matches")
    d = freqs.mean_hfa_score
    if not 0.0 < d < 1.0:
        raise DegenerateDataError(f"mean home score {d} is at the boundary; eta is unbounded")
    params = ACParams(scale=1.0, hfa=0.0, alpha=tuple(alpha), scores=freqs.scores)
    if not exact:
        return logit(d) * beta_ac_to_logistic(params).factor
    alpha_arr = np.asarray(params.alpha)
    delta_arr = freqs.scores.as_array()

    def mean_at(u: float) -> float:
        return float(ac_mean_var(alpha_arr, delta_arr, u)[0][0])

    lo, hi = -60.0, 60.0
    if not mean_at(lo) < d < mean_at(hi):
        raise DegenerateDataError("mean home score outside the model's reachable range")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mean_at(mid) < d:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13:
            break
    return 0.5 * (lo + hi)


def simple_beta(alpha, scores: OutcomeScale) -> float:
    """Closed-form scale factor ignoring estimation noise: ``1 / beta_AC_to_logistic``."""
    params = ACParams(scale=1.0, hfa=0.0, alpha=tuple(alpha), scores=scores)
    return beta_ac_to_logistic(params).inverse


# ---------------------------------------------------------------------------
# identified model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IdentifiedModel:
    """Prediction-model parameters estimated from data, plus fit metadata.

    Predictions evaluate the AC model at ``u = z / (s * beta) + eta * h``
    where ``s`` is the ranking scale the skill differences came from.
    """

    alpha: tuple[float, ...]
    eta: float
    beta: float
    scores: OutcomeScale
    method: str
    n_train: int = 0
    loglik: float = math.nan
    train_window: tuple[int, int] | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        alpha = tuple(float(a) for a in self.alpha)
        object.__setattr__(self, "alpha", alpha)
        if len(alpha) != self.scores.levels:
            raise InvalidInputError("alpha length must match the outcome scale")
        if not all(math.isfinite(a) for a in alpha):
            raise InvalidInputError("alpha must be finite")
        if any(abs(a - am) > 1e-9 for a, am in zip(alpha, reversed(alpha))):
            raise InvalidInputError("identified alpha must be symmetric")
        check_finite("eta", self.eta)
        check_positive("beta", self.beta)

    @property
    def gamma(self) -> float:
        return 1.0 / self.beta

    @property
    def alpha1(self) -> float | None:
        return self.alpha[1] if self.scores.levels > 2 else None

    def argument(self, z, h, scale: float):
        """Model argument ``u`` for skill differences at ranking scale `scale`."""
        z = np.asarray(z, dtype=float)
        h = np.asarray(h, dtype=float)
        return z / (scale * self.beta) + self.eta * h

    def predict_table(self, z, h, scale: float) -> np.ndarray:
        """Outcome probabilities, one row per sample."""
        return ac_table(np.asarray(self.alpha), self.scores.as_array(), self.argument(z, h, scale))

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "alpha": list(self.alpha),
            "eta": self.eta,
            "beta": self.beta,
            "train_window": None if self.train_window is None else list(self.train_window),
            "loglik": None if math.isnan(self.loglik) else self.loglik,
        }

    @classmethod
    def from_json_dict(cls, payload: dict, scores: OutcomeScale) -> "IdentifiedModel":
        try:
            window = payload.get("train_window")
            return cls(
                alpha=tuple(float(a) for a in payload["alpha"]),
                eta=float(payload["eta"]),
                beta=float(payload["beta"]),
                scores=scores,
                method=str(payload["method"]),
                loglik=math.nan if payload.get("loglik") is None else float(payload["loglik"]),
                train_window=None if window is None else (int(window[0]), int(window[1])),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed identified-model object: {exc}") from exc


@dataclass(frozen=True)
class FitConstraints:
    """Fixes a subset of the fit parameters; ``None`` means free."""

    alpha: tuple[float, ...] | None = None
    eta: float | None = None
    gamma: float | None = None


def ac_total_loglik(samples: MatchSamples, scale: float, alpha, eta: float,
                    gamma: float, scores: OutcomeScale) -> float:
    """Total AC log-likelihood of the samples at ``u = gamma z / s + eta h``."""
    check_positive("scale", scale)
    u = gamma * samples.z / scale + eta * samples.h
    log_table = ac_log_table(np.asarray(alpha, dtype=float), scores.as_array(), u)
    return float(log_table[np.arange(len(samples)), samples.y].sum())


# ---------------------------------------------------------------------------
# batch maximum likelihood (coordinate-wise damped Newton)
# ---------------------------------------------------------------------------


@dataclass
class _FitProblem:
    """Joint maximum-likelihood problem over (gamma, eta, free symmetric alpha).

    The objective ``sum_t log P_{y_t}(gamma zs_t + eta h_t; alpha)`` is a sum
    of affine-composed negative logsumexps, hence jointly concave in all
    three parameter groups, so damped Newton ascent with the exact Hessian
    converges globally and quadratically near the optimum.
    """

    zs: np.ndarray  # z / s
    y: np.ndarray
    h: np.ndarray
    delta: np.ndarray
    levels: int
    free_gamma: bool
    free_eta: bool
    free_alpha_idx: list[int]

    def unpack(self, x: np.ndarray, gamma: float, eta: float, alpha: np.ndarray):
        pos = 0
        if self.free_gamma:
            gamma = float(x[pos])
            pos += 1
        if self.free_eta:
            eta = float(x[pos])
            pos += 1
        if self.free_alpha_idx:
            alpha = alpha.copy()
            for k, value in zip(self.free_alpha_idx, x[pos:]):
                alpha[k] = value
                alpha[self.levels - 1 - k] = value
        return gamma, eta, alpha

    def evaluate(self, gamma: float, eta: float, alpha: np.ndarray):
        u = gamma * self.zs + eta * self.h
        w = alpha[None, :] + np.multiply.outer(u, self.delta)
        m = w.max(axis=1, keepdims=True)
        e = np.exp(w - m)
        norm = e.sum(axis=1)
        p = e / norm[:, None]
        rows = np.arange(len(u))
        loglik = float(np.sum(w[rows, self.y] - (np.log(norm) + m[:, 0])))
        return p, loglik

    def grad_hessian(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Exact gradient and Hessian over the free parameter vector."""
        delta = self.delta
        mean = p @ delta
        var = p @ (delta * delta) - mean * mean
        residual = delta[self.y] - mean

        labels: list[str] = []
        if self.free_gamma:
            labels.append("gamma")
        if self.free_eta:
            labels.append("eta")
        labels.extend(f"alpha{k}" for k in self.free_alpha_idx)
        dim = len(labels)
        grad = np.zeros(dim)
        hess = np.zeros((dim, dim))

        # per-pair occupation probabilities q_k and score masses r_k
        pair_q = {}
        pair_r = {}
        for k in self.free_alpha_idx:
            mk = self.levels - 1 - k
            if mk == k:
                q = p[:, k]
                r = delta[k] * p[:, k]
            else:
                q = p[:, k] + p[:, mk]
                r = delta[k] * p[:, k] + delta[mk] * p[:, mk]
            pair_q[k] = q
            pair_r[k] = r

        for a, name_a in enumerate(labels):
            if name_a == "gamma":
                grad[a] = float(self.zs @ residual)
            elif name_a == "eta":
                grad[a] = float(self.h @ residual)
            else:
                k = int(name_a[5:])
                mk = self.levels - 1 - k
                cnt = (self.y == k) if mk == k else ((self.y == k) | (self.y == mk))
                grad[a] = float(cnt.sum()) - float(pair_q[k].sum())
            for b in range(a, dim):
                name_b = labels[b]
                if name_a == "gamma" and name_b == "gamma":
                    value = -float((self.zs * self.zs) @ var)
                elif {name_a, name_b} == {"gamma", "eta"}:
                    value = -float((self.zs * self.h) @ var)
                elif name_a == "eta" and name_b == "eta":
                    value = -float(self.h @ var)
                elif name_b.startswith("alpha") and not name_a.startswith("alpha"):
                    k = int(name_b[5:])
                    coupling = pair_r[k] - mean * pair_q[k]
                    weights = self.zs if name_a == "gamma" else self.h
                    value = -float(weights @ coupling)
                else:
                    k = int(name_a[5:])
                    l = int(name_b[5:])
                    if k == l:
                        value = -float((pair_q[k] * (1.0 - pair_q[k])).sum())
                    else:
                        value = float((pair_q[k] * pair_q[l]).sum())
                hess[a, b] = hess[b, a] = value
        return grad, hess


_DIVERGENCE_BOUND = 75.0


def _maximize_ac(
    problem: _FitProblem,
    gamma: float,
    eta: float,
    alpha: np.ndarray,
    gtol: float,
    max_iter: int,
):
    """Damped Newton ascent; stops when every gradient entry is below `gtol`."""
    if max_iter < 1:
        raise InvalidInputError("max_iter must be >= 1")
    dim = problem.free_gamma + problem.free_eta + len(problem.free_alpha_idx)
    p, loglik = problem.evaluate(gamma, eta, alpha)
    if dim == 0:
        return gamma, eta, alpha, loglik, 0, 0.0, [loglik]

    x = np.array(
        ([gamma] if problem.free_gamma else [])
        + ([eta] if problem.free_eta else [])
        + [alpha[k] for k in problem.free_alpha_idx]
    )
    grad_max = math.inf
    loglik_path = [loglik]
    for iteration in range(1, max_iter + 1):
        grad, hess = problem.grad_hessian(p)
        grad_max = float(np.abs(grad).max())
        if grad_max <= gtol:
            return gamma, eta, alpha, loglik, iteration - 1, grad_max, loglik_path
        try:
            direction = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            raise DegenerateDataError(
                "singular curvature; the free parameters are not jointly identifiable"
            ) from None
        expected = float(grad @ direction)
        if expected <= 0.0:
            raise DegenerateDataError("curvature is not negative definite; data degenerate")
        # once the first-order improvement is below the objective's rounding
        # noise, take the raw Newton step: quadratic convergence finishes the
        # job even though the objective itself can no longer visibly improve.
        noise_floor = 1e-11 * (1.0 + abs(loglik))
        step = 1.0
        while True:
            candidate = x + step * direction
            gamma_c, eta_c, alpha_c = problem.unpack(candidate, gamma, eta, alpha)
            p_c, loglik_c = problem.evaluate(gamma_c, eta_c, alpha_c)
            if (
                loglik_c >= loglik + 1e-4 * step * expected
                or step * expected <= noise_floor
            ):
                x, gamma, eta, alpha, p, loglik = candidate, gamma_c, eta_c, alpha_c, p_c, loglik_c
                loglik_path.append(loglik)
                break
            step *= 0.5
            if step < 2.0**-60:
                raise ConvergenceError("line search failed; objective numerically flat")
        # divergence shows up in the scale-free parameters or in saturated
        # model arguments (gamma itself may be legitimately large when the
        # stated scale differs from the one the skills were produced at)
        argument_max = float(np.abs(gamma * problem.zs + eta * problem.h).max())
        if (
            abs(eta) > _DIVERGENCE_BOUND
            or float(np.abs(alpha).max()) > _DIVERGENCE_BOUND
            or argument_max > 600.0
        ):
            raise ConvergenceError("estimates diverging; the data may be separable or degenerate")
    raise ConvergenceError(f"no convergence after {max_iter} iterations (|grad| = {grad_max:.3g})")


def _closed_form_start(samples, scores, constraints, smoothing):
    levels = scores.levels
    alpha0 = np.zeros(levels)
    eta0 = 0.0
    gamma0 = 1.0
    try:
        freqs = outcome_frequencies(samples, scores, smoothing)
        if constraints.alpha is None and n_free_alpha(levels):
            alpha0 = simple_alpha(freqs)
        if constraints.eta is None:
            eta0 = simple_eta(freqs, alpha0)
        if constraints.gamma is None:
            gamma0 = 1.0 / simple_beta(alpha0, scores)
    except (DegenerateDataError, InvalidInputError):
        pass  # fall back to the neutral start for whatever failed
    return alpha0, eta0, gamma0


def fit_full(
    samples: MatchSamples,
    scale: float,
    scores: OutcomeScale,
    constraints: FitConstraints | None = None,
    method: str | None = None,
    train_window: tuple[int, int] | None = None,
    smoothing: float = 0.5,
    gtol: float = 1e-9,
    max_iter: int = 500,
) -> IdentifiedModel:
    """Batch pseudo-model identification: maximise the AC log-likelihood.

    Maximises ``sum_t log P_{y_t}(gamma z_t / s + eta h_t; alpha)`` over the
    free parameters (symmetric ``alpha`` with tied mirrors, ``eta``, and
    ``gamma = 1 / beta``) by coordinate-wise damped Newton ascent with
    backtracking.  ``constraints`` freezes any subset — freezing everything
    but ``gamma`` gives the optimal-scaling fit.  The objective is concave in
    each coordinate; at the returned point every free-coordinate gradient is
    below `gtol` in absolute value.

    Raises
    ------
    DegenerateDataError
        If a free parameter is structurally unidentifiable (e.g. constant
        skill differences with no venue variation, or a single observed
        outcome).
    ConvergenceError
        If the ascent does not reach the tolerance within `max_iter` sweeps.
    """
    check_positive("scale", scale)
    constraints = constraints or FitConstraints()
    if len(samples) == 0:
        raise InvalidInputError("cannot fit on an empty sample set")
    levels = scores.levels
    if samples.y.max() >= levels:
        raise InvalidInputError("outcome index outside the outcome scale")

    free_gamma = constraints.gamma is None
    free_eta = constraints.eta is None
    free_alpha_idx = (
        list(range(1, n_free_alpha(levels) + 1)) if constraints.alpha is None else []
    )
    free: list[str] = (
        (["gamma"] if free_gamma else [])
        + (["eta"] if free_eta else [])
        + [f"alpha{k}" for k in free_alpha_idx]
    )

    zs = samples.z / scale
    if constraints.gamma is None:
        if np.ptp(zs) == 0.0 and zs[0] == 0.0:
            raise DegenerateDataError("all skill differences are zero; gamma not identifiable")
        if constraints.eta is None and np.ptp(zs) == 0.0 and np.ptp(samples.h) == 0.0:
            raise DegenerateDataError(
                "constant skill differences with no venue variation; gamma and eta confounded"
            )
    if constraints.eta is None and not samples.h.any():
        raise DegenerateDataError("eta requires home-venue matches")
    if free and np.unique(samples.y).size == 1:
        raise DegenerateDataError("all outcomes identical; parameters diverge")

    alpha0, eta0, gamma0 = _closed_form_start(samples, scores, constraints, smoothing)
    if constraints.alpha is not None:
        alpha0 = np.asarray(
            expand_symmetric_alpha(levels, _free_from_full(constraints.alpha, levels)), dtype=float
        )
    if constraints.eta is not None:
        eta0 = check_finite("eta constraint", constraints.eta)
    if constraints.gamma is not None:
        gamma0 = check_positive("gamma constraint", constraints.gamma)

    problem = _FitProblem(
        zs=zs,
        y=samples.y,
        h=samples.h.astype(float),
        delta=scores.as_array(),
        levels=levels,
        free_gamma=free_gamma,
        free_eta=free_eta,
        free_alpha_idx=free_alpha_idx,
    )
    gamma, eta, alpha, loglik, iterations, grad_max, loglik_path = _maximize_ac(
        problem, gamma0, eta0, np.asarray(alpha0, dtype=float), gtol, max_iter
    )
    if gamma <= 0.0:
        raise ConvergenceError(
            "fitted gamma is non-positive: skill differences anti-correlate with outcomes"
        )

    if method is None:
        if not free:
            method = "fixed"
        elif free == ["gamma"]:
            method = "optimal-scaling"
        elif constraints.alpha is None and constraints.eta is None and constraints.gamma is None:
            method = "fully-adaptive"
        else:
            method = "constrained"
    return IdentifiedModel(
        alpha=tuple(alpha),
        eta=eta,
        beta=1.0 / gamma,
        scores=scores,
        method=method,
        n_train=len(samples),
        loglik=loglik,
        train_window=train_window,
        meta={
            "iterations": iterations,
            "max_abs_gradient": grad_max,
            "free": tuple(free),
            "loglik_path": tuple(loglik_path),
        },
    )


def _free_from_full(alpha: Sequence[float], levels: int) -> list[float]:
    alpha = [float(a) for a in alpha]
    if len(alpha) != levels:
        raise InvalidInputError("alpha constraint length must match the outcome scale")
    return [alpha[k] for k in range(1, n_free_alpha(levels) + 1)]


def fit_binary(
    samples: MatchSamples,
    scale: float,
    eta: float | None = None,
    train_window: tuple[int, int] | None = None,
    gtol: float = 1e-9,
    max_iter: int = 500,
) -> IdentifiedModel:
    """Binary-outcome fit of ``(gamma, eta)``; ``beta = 1 / gamma``.

    A convenience front end to :func:`fit_full` for the logistic model
    (L = 2, no free biases).  Pass `eta` to freeze the home advantage.
    """
    if samples.y.max() > 1:
        raise InvalidInputError("binary fit requires outcomes in {0, 1}")
    if np.unique(samples.y).size < 2:
        raise DegenerateDataError("all outcomes identical; fit diverges")
    if np.ptp(samples.z) == 0.0:
        raise DegenerateDataError("need at least two distinct skill differences")
    return fit_full(
        samples,
        scale,
        OutcomeScale.uniform(2),
        constraints=FitConstraints(eta=eta),
        method="data-fit",
        train_window=train_window,
        gtol=gtol,
        max_iter=max_iter,
    )


# ---------------------------------------------------------------------------
# on-line mini-batch scale adaptation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GammaTrace:
    """Per-match trace of the on-line scale factor; ``gamma[k]`` is in force at ``t[k]``."""

    t: np.ndarray
    gamma: np.ndarray
    window: int
    step_size: float
    clamped: bool

    @property
    def beta(self) -> np.ndarray:
        return 1.0 / self.gamma

    def mean_beta(self, start: int, stop: int) -> float:
        """Average of ``beta_t`` over sequence indices in ``[start, stop)``."""
        mask = (self.t >= start) & (self.t < stop)
        if not mask.any():
            raise InvalidInputError("no trace entries inside the window")
        return float(np.mean(1.0 / self.gamma[mask]))


def online_gamma(
    samples: MatchSamples,
    alpha,
    eta: float,
    scale: float,
    window: int,
    step_size: float,
    gamma0: float = 1.0,
    scores: OutcomeScale | None = None,
    gamma_min: float = 1e-3,
) -> GammaTrace:
    """On-line mini-batch adaptation of ``gamma = 1 / beta``.

    After observing match ``t`` the factor moves along the mini-batch
    gradient of the log-likelihood over the last `window` matches::

        gamma <- gamma + step_size / W * sum (z/s) (delta_y - G(gamma z/s + eta h))

    with ``alpha`` and ``eta`` held fixed.  The emitted trace holds the value
    in force at each match, so predictions at ``t`` never depend on the
    outcome of ``t`` or anything later.  ``window=1`` is plain per-sample
    stochastic ascent.  Non-positive excursions are clamped at `gamma_min`
    and flagged.
    """
    if window < 1:
        raise InvalidInputError("window must be >= 1")
    check_positive("step_size", step_size)
    check_positive("gamma0", gamma0)
    check_positive("scale", scale)
    if scores is None:
        scores = OutcomeScale.uniform(len(alpha))
    alpha_arr = np.asarray(alpha, dtype=float)
    delta = scores.as_array()
    if samples.y.max() >= scores.levels:
        raise InvalidInputError("outcome index outside the outcome scale")

    zs = samples.z / scale
    h = samples.h.astype(float)
    score_of = delta[samples.y]
    n = len(samples)
    trace = np.empty(n)
    gamma = float(gamma0)
    clamped = False
    for pos in range(n):
        trace[pos] = gamma
        if pos < window - 1:
            continue
        sl = slice(pos - window + 1, pos + 1)
        mean, _ = ac_mean_var(alpha_arr, delta, gamma * zs[sl] + eta * h[sl])
        gamma += step_size * float(np.mean(zs[sl] * (score_of[sl] - mean)))
        if gamma < gamma_min:
            gamma = gamma_min
            clamped = True
    return GammaTrace(
        t=samples.t.copy(), gamma=trace, window=window, step_size=step_size, clamped=clamped
    )


# ---------------------------------------------------------------------------
# estimator front end
# ---------------------------------------------------------------------------


class ACModelIdentifier(BaseEstimator):
    """Identify an AC prediction model from ``(z, h) -> y`` samples.

    A scikit-learn compatible classifier over ordered outcomes.  ``X`` is
    either a 1-D array of skill differences or a two-column array
    ``[z, h]`` with the venue flag second; ``y`` holds outcome indices in
    ``[0, levels)``.

    Parameters
    ----------
    levels : int
        Number of ordered outcomes (ignored when `delta` is given).
    delta : sequence of float, optional
        Outcome scores; defaults to uniform spacing.
    scale : float
        Rating scale the skill differences were produced at.
    method : {'full', 'scale-only', 'closed-form'}
        ``'full'`` fits alpha, eta and the scale factor by maximum
        likelihood; ``'scale-only'`` fixes alpha and eta at their closed-form
        values and fits the scale factor; ``'closed-form'`` uses the closed
        forms alone (no optimisation).
    smoothing : float
        Additive smoothing for the frequency-based closed forms.
    """

    def __init__(
        self,
        levels: int = 2,
        delta: Sequence[float] | None = None,
        scale: float = 1.0,
        method: str = "full",
        smoothing: float = 0.5,
        tol: float = 1e-9,
        max_iter: int = 500,
    ):
        self.levels = levels
        self.delta = delta
        self.scale = scale
        self.method = method
        self.smoothing = smoothing
        self.tol = tol
        self.max_iter = max_iter

    def _scores(self) -> OutcomeScale:
        if self.delta is not None:
            return OutcomeScale(tuple(self.delta))
        return OutcomeScale.uniform(self.levels)

    def _samples(self, X, y=None) -> MatchSamples:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            z, h = X, np.zeros(len(X), dtype=int)
        elif X.ndim == 2 and X.shape[1] in (1, 2):
            z = X[:, 0]
            h = X[:, 1].astype(int) if X.shape[1] == 2 else np.zeros(len(X), dtype=int)
        else:
            raise InvalidInputError("X must be 1-D (z) or have columns [z] or [z, h]")
        if y is None:
            y = np.zeros(len(z), dtype=int)
        return MatchSamples(t=np.arange(len(z)), z=z, y=np.asarray(y, dtype=int), h=h)

    def fit(self, X, y):
        scores = self._scores()
        samples = self._samples(X, y)
        if self.method == "full":
            # without home-venue matches eta is unidentifiable; pin it at 0
            constraints = FitConstraints() if samples.h.any() else FitConstraints(eta=0.0)
            model = fit_full(
                samples, self.scale, scores, constraints=constraints,
                method="fully-adaptive", smoothing=self.smoothing,
                gtol=self.tol, max_iter=self.max_iter,
            )
        elif self.method in ("scale-only", "closed-form"):
            freqs = outcome_frequencies(samples, scores, self.smoothing)
            alpha = simple_alpha(freqs)
            eta_flag = None
            try:
                eta = simple_eta(freqs, alpha)
            except DegenerateDataError as exc:
                eta, eta_flag = 0.0, str(exc)
            if self.method == "scale-only":
                model = fit_full(
                    samples, self.scale, scores,
                    constraints=FitConstraints(alpha=tuple(alpha), eta=eta),
                    gtol=self.tol, max_iter=self.max_iter,
                )
            else:
                model = IdentifiedModel(
                    alpha=tuple(alpha),
                    eta=eta,
                    beta=simple_beta(alpha, scores),
                    scores=scores,
                    method="closed-form",
                    n_train=len(samples),
                    loglik=math.nan,
                )
            if eta_flag is not None:
                model.meta["eta_fallback"] = eta_flag
        else:
            raise InvalidInputError(f"unknown method {self.method!r}")
        self.model_ = model
        self.alpha_ = np.asarray(model.alpha)
        self.eta_ = model.eta
        self.beta_ = model.beta
        self.gamma_ = model.gamma
        self.loglik_ = model.loglik
        self.classes_ = np.arange(scores.levels)
        self.n_features_in_ = 2
        return self

    def predict_proba(self, X) -> np.ndarray:
        samples = self._samples(X)
        return self.model_.predict_table(samples.z, samples.h, self.scale)

    def predict(self, X) -> np.ndarray:
        return self.predict_proba(X).argmax(axis=1)

    def log_score(self, X, y) -> float:
        """Mean negated predictive log-likelihood (lower is better)."""
        samples = self._samples(X, y)
        u = self.model_.argument(samples.z, samples.h, self.scale)
        table = ac_log_table(self.alpha_, self._scores().as_array(), u)
        return -float(np.mean(table[np.arange(len(samples)), samples.y]))

    def score(self, X, y) -> float:
        """Mean predictive log-likelihood, so that greater is better."""
        return -self.log_score(X, y)
