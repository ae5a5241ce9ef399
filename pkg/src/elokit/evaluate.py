"""Predictive evaluation: log-scores and the multi-method comparison harness.

The quality metric is the log-score — the mean negated predictive
log-likelihood over a test window whose matches strictly follow the training
window.  The harness identifies each method's prediction model on the
training window, scores it on the test window, and aggregates (mean, std)
across independent Monte-Carlo realizations, producing report tables that
rank the methods by how much of the data they use.

Methods (by name):

``conventional``
    Reuse the ranking model for prediction: binomial AC biases, scale factor
    ``1 / (L - 1)``, no home advantage.  Data-free straw man.
``simple-no-hfa`` / ``simple-with-hfa``
    Closed-form biases from outcome frequencies, closed-form scale factor;
    optionally the closed-form home advantage.
``optimal-scaling``
    Closed-form biases and home advantage, scale factor fitted by maximum
    likelihood.
``fully-adaptive``
    All prediction parameters fitted jointly.
``online-adaptive``
    Closed-form biases and home advantage; scale factor tracked by on-line
    mini-batch ascent, scored with the value in force at each test match.
``gelo-reference``
    Skills re-ranked by G-Elo with the true model; only the scale factor is
    fitted (it then measures pure estimation noise).
``ground-truth``
    True parameters on the true skill differences — the entropy floor.
``assume-no-error`` / ``theoretical`` / ``data-fit``
    Binary-outcome trio: nominal parameters, closed-form noise correction,
    and the maximum-likelihood fit.

Realizations are independent; the harness is deterministic given the preset
seed and the number of realizations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ._validation import check_positive
from .diagnostics import NoiseModel, effective_params
from .engine import SkillState, TrajectoryOptions, run_matches
from .exceptions import ElokitError, InvalidInputError
from .identify import (
    FitConstraints,
    GammaTrace,
    IdentifiedModel,
    MatchSamples,
    fit_binary,
    fit_full,
    online_gamma,
    outcome_frequencies,
    simple_alpha,
    simple_beta,
    simple_eta,
)
from .outcomes import ACParams, OutcomeScale, ac_log_table, binomial_ac_params
from .simulate import Preset, iter_outputs

__all__ = [
    "EvaluationSpec",
    "OnlineSettings",
    "DataContext",
    "MethodSummary",
    "EvaluationReport",
    "METHOD_NAMES",
    "log_score",
    "loglik_rows",
    "conventional_model",
    "run_comparison",
]

_NO_SNAPSHOTS = TrajectoryOptions(stride=2**62)

METHOD_NAMES = (
    "conventional",
    "simple-no-hfa",
    "simple-with-hfa",
    "optimal-scaling",
    "fully-adaptive",
    "online-adaptive",
    "gelo-reference",
    "ground-truth",
    "assume-no-error",
    "theoretical",
    "data-fit",
)


@dataclass(frozen=True)
class EvaluationSpec:
    """Train/test windows (half-open index ranges) and the methods to compare."""

    train: tuple[int, int]
    test: tuple[int, int]
    methods: tuple[str, ...]

    def __post_init__(self) -> None:
        train = (int(self.train[0]), int(self.train[1]))
        test = (int(self.test[0]), int(self.test[1]))
        object.__setattr__(self, "train", train)
        object.__setattr__(self, "test", test)
        object.__setattr__(self, "methods", tuple(self.methods))
        for name, window in (("train", train), ("test", test)):
            if window[1] <= window[0]:
                raise InvalidInputError(f"{name} window {window} is empty")
        if test[0] < train[1]:
            raise InvalidInputError(
                f"test window {test} must start after the training window {train} ends"
            )
        unknown = [m for m in self.methods if m not in METHOD_NAMES]
        if unknown:
            raise InvalidInputError(f"unknown methods {unknown}; available: {METHOD_NAMES}")

    @classmethod
    def from_preset(cls, preset: Preset) -> "EvaluationSpec":
        if preset.train is None or preset.test is None or not preset.methods:
            raise InvalidInputError(f"preset {preset.name!r} does not define an evaluation")
        return cls(train=preset.train, test=preset.test, methods=preset.methods)


@dataclass(frozen=True)
class OnlineSettings:
    """Mini-batch settings for the on-line scale adaptation."""

    window: int = 100
    step_size: float = 0.1
    gamma0: float = 1.0


@dataclass(frozen=True)
class DataContext:
    """Real-data evaluation input: samples with externally produced skill differences."""

    samples: MatchSamples
    scale: float
    scores: OutcomeScale
    nominal_eta: float = 0.0
    noise: NoiseModel | None = None
    online: OnlineSettings | None = None


def log_score(
    samples: MatchSamples,
    model: IdentifiedModel,
    scale: float,
    scores: OutcomeScale | None = None,
) -> float:
    """Mean negated AC log-likelihood of the samples under the model; lower is better."""
    if len(samples) == 0:
        raise InvalidInputError("cannot score an empty test window")
    check_positive("scale", scale)
    scores = scores if scores is not None else model.scores
    if scores.levels != model.scores.levels:
        raise InvalidInputError("outcome scale does not match the model")
    u = model.argument(samples.z, samples.h, scale)
    table = ac_log_table(np.asarray(model.alpha), scores.as_array(), u)
    return -float(np.mean(table[np.arange(len(samples)), samples.y]))


def conventional_model(scores: OutcomeScale) -> IdentifiedModel:
    """The coupled prediction model implied by uniform-score Elo: no data involved."""
    params = binomial_ac_params(scores.levels)
    return IdentifiedModel(
        alpha=params.alpha,
        eta=0.0,
        beta=1.0 / (scores.levels - 1),
        scores=scores,
        method="conventional",
    )


# ---------------------------------------------------------------------------
# method implementations
# ---------------------------------------------------------------------------


@dataclass
class _MethodInput:
    """Everything one method needs for one realization."""

    train: MatchSamples
    test: MatchSamples
    stream: MatchSamples  # train start .. test stop, for the on-line method
    scale: float
    scores: OutcomeScale
    nominal_eta: float
    noise: NoiseModel | None
    true_params: ACParams | None
    online: OnlineSettings
    train_window: tuple[int, int]
    smoothing: float = 0.5


@dataclass
class _MethodOutput:
    model: IdentifiedModel
    ls: float
    trace: GammaTrace | None = None
    loglik_rows: np.ndarray | None = None


def _simple_parts(inp: _MethodInput, with_eta: bool):
    freqs = outcome_frequencies(inp.train, inp.scores, inp.smoothing)
    alpha = simple_alpha(freqs)
    eta = simple_eta(freqs, alpha) if with_eta else 0.0
    return alpha, eta


def loglik_rows(samples: MatchSamples, model: IdentifiedModel, scale: float) -> np.ndarray:
    """Per-match predictive log-likelihoods (for plotting / export)."""
    u = model.argument(samples.z, samples.h, scale)
    table = ac_log_table(np.asarray(model.alpha), model.scores.as_array(), u)
    return table[np.arange(len(samples)), samples.y]


def _score(inp: _MethodInput, model: IdentifiedModel) -> _MethodOutput:
    rows = loglik_rows(inp.test, model, inp.scale)
    return _MethodOutput(model=model, ls=-float(np.mean(rows)), loglik_rows=rows)


def _run_conventional(inp: _MethodInput) -> _MethodOutput:
    return _score(inp, conventional_model(inp.scores))


def _run_simple(inp: _MethodInput, with_eta: bool) -> _MethodOutput:
    alpha, eta = _simple_parts(inp, with_eta)
    model = IdentifiedModel(
        alpha=tuple(alpha),
        eta=eta,
        beta=simple_beta(alpha, inp.scores),
        scores=inp.scores,
        method="simple-with-hfa" if with_eta else "simple-no-hfa",
        n_train=len(inp.train),
        train_window=inp.train_window,
    )
    return _score(inp, model)


def _run_optimal_scaling(inp: _MethodInput) -> _MethodOutput:
    alpha, eta = _simple_parts(inp, with_eta=True)
    model = fit_full(
        inp.train,
        inp.scale,
        inp.scores,
        constraints=FitConstraints(alpha=tuple(alpha), eta=eta),
        method="optimal-scaling",
        train_window=inp.train_window,
        smoothing=inp.smoothing,
    )
    return _score(inp, model)


def _run_fully_adaptive(inp: _MethodInput) -> _MethodOutput:
    model = fit_full(
        inp.train,
        inp.scale,
        inp.scores,
        method="fully-adaptive",
        train_window=inp.train_window,
        smoothing=inp.smoothing,
    )
    return _score(inp, model)


def _run_gelo_reference(inp: _MethodInput) -> _MethodOutput:
    if inp.true_params is None:
        raise InvalidInputError("gelo-reference needs the true model parameters")
    model = fit_full(
        inp.train,
        inp.scale,
        inp.scores,
        constraints=FitConstraints(alpha=inp.true_params.alpha, eta=inp.true_params.hfa),
        method="gelo-reference",
        train_window=inp.train_window,
        smoothing=inp.smoothing,
    )
    return _score(inp, model)


def _run_ground_truth(inp: _MethodInput) -> _MethodOutput:
    if inp.true_params is None:
        raise InvalidInputError("ground-truth needs the true model parameters")
    model = IdentifiedModel(
        alpha=inp.true_params.alpha,
        eta=inp.true_params.hfa,
        beta=1.0,
        scores=inp.scores,
        method="ground-truth",
    )
    return _score(inp, model)


def _run_assume_no_error(inp: _MethodInput) -> _MethodOutput:
    model = IdentifiedModel(
        alpha=(0.0,) * inp.scores.levels,
        eta=inp.nominal_eta,
        beta=1.0,
        scores=inp.scores,
        method="assume-no-error",
    )
    return _score(inp, model)


def _run_theoretical(inp: _MethodInput) -> _MethodOutput:
    if inp.noise is None:
        raise InvalidInputError("theoretical correction needs a noise model")
    _, eta_hat, beta_err = effective_params(inp.nominal_eta, inp.noise)
    model = IdentifiedModel(
        alpha=(0.0,) * inp.scores.levels,
        eta=eta_hat,
        beta=beta_err,
        scores=inp.scores,
        method="theoretical",
    )
    return _score(inp, model)


def _run_data_fit(inp: _MethodInput) -> _MethodOutput:
    model = fit_binary(inp.train, inp.scale, train_window=inp.train_window)
    return _score(inp, model)


def _run_online_adaptive(inp: _MethodInput) -> _MethodOutput:
    alpha, eta = _simple_parts(inp, with_eta=True)
    settings = inp.online
    trace = online_gamma(
        inp.stream,
        alpha,
        eta,
        inp.scale,
        window=settings.window,
        step_size=settings.step_size,
        gamma0=settings.gamma0,
        scores=inp.scores,
    )
    # identified parameters (alpha, eta, gamma0) depend on the training window
    # only; the per-match gamma_t used below is one-step-ahead causal state.
    test_mask = (trace.t >= inp.test.t.min()) & (trace.t <= inp.test.t.max())
    gamma_test = trace.gamma[test_mask]
    u = gamma_test * inp.test.z / inp.scale + eta * inp.test.h
    table = ac_log_table(np.asarray(alpha), inp.scores.as_array(), u)
    rows = table[np.arange(len(inp.test)), inp.test.y]
    model = IdentifiedModel(
        alpha=tuple(alpha),
        eta=eta,
        beta=float(np.mean(1.0 / gamma_test)),
        scores=inp.scores,
        method="online-adaptive",
        n_train=len(inp.train),
        train_window=inp.train_window,
        meta={"gamma0": settings.gamma0, "window": settings.window,
              "step_size": settings.step_size, "clamped": trace.clamped},
    )
    return _MethodOutput(model=model, ls=-float(np.mean(rows)), trace=trace, loglik_rows=rows)


_RUNNERS = {
    "conventional": _run_conventional,
    "simple-no-hfa": lambda inp: _run_simple(inp, with_eta=False),
    "simple-with-hfa": lambda inp: _run_simple(inp, with_eta=True),
    "optimal-scaling": _run_optimal_scaling,
    "fully-adaptive": _run_fully_adaptive,
    "online-adaptive": _run_online_adaptive,
    "gelo-reference": _run_gelo_reference,
    "ground-truth": _run_ground_truth,
    "assume-no-error": _run_assume_no_error,
    "theoretical": _run_theoretical,
    "data-fit": _run_data_fit,
}

#: methods whose samples come from a G-Elo re-ranking or the true differences
_SOURCE = {name: "elo" for name in METHOD_NAMES}
_SOURCE["gelo-reference"] = "gelo"
_SOURCE["ground-truth"] = "true"


# ---------------------------------------------------------------------------
# report containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MethodSummary:
    method: str
    n: int
    failures: int
    alpha1: float | None = None
    alpha1_std: float | None = None
    beta: float | None = None
    beta_std: float | None = None
    eta: float | None = None
    eta_std: float | None = None
    log_score: float | None = None
    log_score_std: float | None = None
    error: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "n": self.n,
            "failures": self.failures,
            "alpha1": self.alpha1,
            "alpha1_std": self.alpha1_std,
            "beta": self.beta,
            "beta_std": self.beta_std,
            "eta": self.eta,
            "eta_std": self.eta_std,
            "log_score": self.log_score,
            "log_score_std": self.log_score_std,
            "error": self.error,
        }


@dataclass
class EvaluationReport:
    """Comparison results: one row per method, plus optional per-method extras."""

    spec: EvaluationSpec
    rows: tuple[MethodSummary, ...]
    realizations: int
    name: str | None = None
    traces: dict[str, GammaTrace] = field(default_factory=dict)
    match_loglik: dict[str, np.ndarray] = field(default_factory=dict)
    models: dict[str, IdentifiedModel] = field(default_factory=dict)
    test_t: np.ndarray | None = None

    def row(self, method: str) -> MethodSummary:
        for row in self.rows:
            if row.method == method:
                return row
        raise KeyError(method)

    def to_json_dict(self) -> dict:
        return {
            "schema": "elokit-evaluation v1",
            "name": self.name,
            "train": list(self.spec.train),
            "test": list(self.spec.test),
            "realizations": self.realizations,
            "rows": [row.to_json_dict() for row in self.rows],
        }

    def to_text(self) -> str:
        headers = ["method", "alpha_1", "beta", "eta", "log-score"]
        lines = [headers]
        for row in self.rows:
            if row.error is not None and row.n == 0:
                lines.append([row.method, "--", "--", "--", f"failed: {row.error}"])
                continue
            lines.append(
                [
                    row.method,
                    _fmt(row.alpha1, row.alpha1_std),
                    _fmt(row.beta, row.beta_std),
                    _fmt(row.eta, row.eta_std),
                    _fmt(row.log_score, row.log_score_std),
                ]
            )
        widths = [max(len(line[col]) for line in lines) for col in range(len(headers))]
        out = []
        for idx, line in enumerate(lines):
            out.append("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip())
            if idx == 0:
                out.append("  ".join("-" * w for w in widths))
        return "\n".join(out) + "\n"


def _fmt(mean: float | None, std: float | None) -> str:
    if mean is None:
        return "--"
    if std is None or std < 1e-12:
        return f"{mean:.3f}"
    return f"({mean:.3f}, {std:.3f})"


def _aggregate(method: str, collected: dict[str, list[float]], failures: int,
               error: str | None) -> MethodSummary:
    n = len(collected["ls"])
    if n == 0:
        return MethodSummary(method=method, n=0, failures=failures, error=error)

    def stat(key: str):
        values = collected[key]
        if not values or all(v is None for v in values):
            return None, None
        arr = np.asarray([v for v in values if v is not None], dtype=float)
        std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        return float(arr.mean()), std

    alpha1, alpha1_std = stat("alpha1")
    beta, beta_std = stat("beta")
    eta, eta_std = stat("eta")
    ls, ls_std = stat("ls")
    return MethodSummary(
        method=method,
        n=n,
        failures=failures,
        alpha1=alpha1,
        alpha1_std=alpha1_std,
        beta=beta,
        beta_std=beta_std,
        eta=eta,
        eta_std=eta_std,
        log_score=ls,
        log_score_std=ls_std,
        error=error,
    )


# ---------------------------------------------------------------------------
# the harness
# ---------------------------------------------------------------------------


def _method_inputs_from_preset(
    preset: Preset, spec: EvaluationSpec, output, online: OnlineSettings, smoothing: float
) -> Mapping[str, _MethodInput]:
    """Build per-source method inputs for one realization."""
    needed = {_SOURCE[m] for m in spec.methods}
    sources: dict[str, tuple[MatchSamples, float]] = {}
    if "elo" in needed:
        state = SkillState(preset.engine)
        _, trajectory = run_matches(state, output.matches, _NO_SNAPSHOTS)
        sources["elo"] = (
            MatchSamples.from_trajectory(trajectory, output.matches),
            preset.engine.scale,
        )
    if "gelo" in needed:
        if preset.gelo_engine is None:
            raise InvalidInputError(f"preset {preset.name!r} defines no G-Elo engine")
        state = SkillState(preset.gelo_engine)
        _, trajectory = run_matches(state, output.matches, _NO_SNAPSHOTS)
        sources["gelo"] = (
            MatchSamples.from_trajectory(trajectory, output.matches),
            preset.gelo_engine.scale,
        )
    if "true" in needed:
        samples = MatchSamples(
            t=np.asarray([m.t for m in output.matches]),
            z=output.true_diffs,
            y=np.asarray([m.outcome for m in output.matches]),
            h=np.asarray([m.venue for m in output.matches]),
        )
        sources["true"] = (samples, output.config.model.scale)

    inputs = {}
    for source, (samples, scale) in sources.items():
        inputs[source] = _MethodInput(
            train=samples.window(*spec.train),
            test=samples.window(*spec.test),
            stream=samples.window(spec.train[0], spec.test[1]),
            scale=scale,
            scores=preset.engine.scores,
            nominal_eta=preset.engine.hfa,
            noise=preset.noise,
            true_params=output.config.model,
            online=online,
            train_window=spec.train,
            smoothing=smoothing,
        )
    return inputs


def run_comparison(
    spec: EvaluationSpec,
    target: Preset | DataContext,
    realizations: int | None = None,
    online: OnlineSettings | None = None,
    smoothing: float = 0.5,
) -> EvaluationReport:
    """Identify every method on the training window and score it on the test window.

    With a :class:`~elokit.simulate.Preset`, runs `realizations` independent
    simulate-rank-identify-score passes and reports (mean, std) across them;
    with a :class:`DataContext`, runs a single pass over the supplied
    samples.  A method failure (degenerate window, non-convergence) is
    recorded in its row and does not abort the run.
    """
    if isinstance(target, DataContext):
        return _run_on_data(spec, target, smoothing)

    preset = target
    n_real = realizations if realizations is not None else preset.realizations
    if n_real < 1:
        raise InvalidInputError("need at least one realization")
    online = online or OnlineSettings()

    collected = {m: {"alpha1": [], "beta": [], "eta": [], "ls": []} for m in spec.methods}
    failures = {m: 0 for m in spec.methods}
    errors: dict[str, str | None] = {m: None for m in spec.methods}

    for output in iter_outputs(preset.sim, n_real):
        inputs = _method_inputs_from_preset(preset, spec, output, online, smoothing)
        for method in spec.methods:
            inp = inputs[_SOURCE[method]]
            try:
                result = _RUNNERS[method](inp)
            except ElokitError as exc:
                failures[method] += 1
                errors[method] = str(exc)
                continue
            bucket = collected[method]
            bucket["alpha1"].append(result.model.alpha1)
            bucket["beta"].append(result.model.beta)
            bucket["eta"].append(result.model.eta)
            bucket["ls"].append(result.ls)

    rows = tuple(
        _aggregate(m, collected[m], failures[m], errors[m]) for m in spec.methods
    )
    return EvaluationReport(spec=spec, rows=rows, realizations=n_real, name=preset.name)


def _run_on_data(spec: EvaluationSpec, data: DataContext, smoothing: float) -> EvaluationReport:
    inp = _MethodInput(
        train=data.samples.window(*spec.train),
        test=data.samples.window(*spec.test),
        stream=data.samples.window(spec.train[0], spec.test[1]),
        scale=data.scale,
        scores=data.scores,
        nominal_eta=data.nominal_eta,
        noise=data.noise,
        true_params=None,
        online=data.online or OnlineSettings(),
        train_window=spec.train,
        smoothing=smoothing,
    )
    if len(inp.train) == 0:
        raise InvalidInputError("training window contains no matches")
    if len(inp.test) == 0:
        raise InvalidInputError("test window contains no matches")

    rows = []
    report = EvaluationReport(spec=spec, rows=(), realizations=1, name="data")
    for method in spec.methods:
        if _SOURCE[method] != "elo":
            rows.append(
                MethodSummary(
                    method=method, n=0, failures=1,
                    error="method needs simulated ground truth",
                )
            )
            continue
        try:
            result = _RUNNERS[method](inp)
        except ElokitError as exc:
            rows.append(MethodSummary(method=method, n=0, failures=1, error=str(exc)))
            continue
        model = result.model
        rows.append(
            MethodSummary(
                method=method,
                n=1,
                failures=0,
                alpha1=model.alpha1,
                alpha1_std=None,
                beta=model.beta,
                beta_std=None,
                eta=model.eta,
                eta_std=None,
                log_score=result.ls,
                log_score_std=None,
            )
        )
        report.models[method] = model
        if result.trace is not None:
            report.traces[method] = result.trace
        if result.loglik_rows is not None:
            report.match_loglik[method] = result.loglik_rows
    report.rows = tuple(rows)
    report.test_t = inp.test.t.copy()
    return report
