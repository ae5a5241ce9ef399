"""Config-driven pipelines behind the command line.

A run is fully described by one YAML config (plus an optional seed
override), so rerunning the same config reproduces the same outputs
byte for byte.  A config either names a preset (``example1``, ``example2``,
``example4`` for synthetic benchmarks, ``fifa`` for scoring an external
match file with supplied ratings) or spells the sections out explicitly;
explicit keys override preset defaults.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import yaml

from . import matchio
from .diagnostics import convergence_report
from .engine import EngineConfig, SkillState, TrajectoryOptions, run_matches
from .evaluate import (
    DataContext,
    EvaluationSpec,
    OnlineSettings,
    run_comparison,
)
from .exceptions import InvalidInputError, SchemaError
from .identify import (
    FitConstraints,
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
from .matchio import DiscretizationRule
from .outcomes import (
    ACParams,
    OutcomeScale,
    beta_ac_to_logistic,
    beta_base_change,
    beta_logistic_to_gaussian,
    rescale_hfa,
)
from .simulate import (
    ConstantStep,
    SimConfig,
    UniformStep,
    get_preset,
    simulate,
)

__all__ = [
    "PipelineResult",
    "load_config",
    "pipeline_simulate",
    "pipeline_rank",
    "pipeline_identify",
    "pipeline_evaluate",
    "pipeline_convergence",
    "pipeline_convert_scale",
    "PIPELINES",
]

logger = logging.getLogger(__name__)

#: canonical (base-e) scale of a base-10 rating with scale 600
_CANONICAL_600 = 600.0 / math.log(10.0)

_SYNTHETIC_PRESETS = ("example1", "example2", "example4")

_FIFA_DEFAULTS: dict[str, Any] = {
    "engine": {"scale": _CANONICAL_600, "hfa": 0.0, "levels": 3},
    "skills_from_columns": True,
    "evaluation": {
        "train": [2000, 4000],
        "test": [4000, None],
        "methods": [
            "conventional",
            "simple-no-hfa",
            "simple-with-hfa",
            "optimal-scaling",
            "online-adaptive",
            "fully-adaptive",
        ],
        "online": {"window": 100, "step_size": 0.1, "gamma0": 1.0},
    },
}


@dataclass
class PipelineResult:
    """Paths written by a pipeline plus any non-fatal warnings."""

    paths: dict[str, Path]
    warnings: list[str]
    report: Any = None


def load_config(path: str | Path) -> dict:
    with Path(path).open("r", encoding="utf-8") as fh:
        config = yaml.safe_load(fh)
    if config is None:
        config = {}
    if not isinstance(config, dict):
        raise SchemaError(f"{path}: config must be a mapping")
    preset = config.get("preset")
    if preset == "fifa":
        config = _merge(_FIFA_DEFAULTS, config)
    elif preset is not None and preset not in _SYNTHETIC_PRESETS:
        raise InvalidInputError(
            f"unknown preset {preset!r}; available: {_SYNTHETIC_PRESETS + ('fifa',)}"
        )
    return config


def _merge(defaults: dict, overrides: dict) -> dict:
    out = dict(defaults)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


# ---------------------------------------------------------------------------
# config section parsing
# ---------------------------------------------------------------------------


def _scores_from(section: dict) -> OutcomeScale:
    if section.get("delta") is not None:
        return OutcomeScale(tuple(float(d) for d in section["delta"]))
    return OutcomeScale.uniform(int(section.get("levels", 2)))


def _engine_from(config: dict) -> EngineConfig:
    section = config.get("engine")
    if section is None:
        raise InvalidInputError("config needs an 'engine' section (or a synthetic preset)")
    scores = _scores_from(section)
    expected = section.get("expected", "logistic")
    scale = float(section["scale"])
    hfa = float(section.get("hfa", 0.0))
    initial = float(section.get("initial_skill", 0.0))
    if expected == "gelo":
        params = ACParams(
            scale=scale, hfa=hfa,
            alpha=tuple(float(a) for a in section["alpha"]),
            scores=scores,
        )
        return EngineConfig.gelo(params, initial_skill=initial)
    base = section.get("base")
    return EngineConfig.elo(
        scale=scale, hfa=hfa, scores=scores, expected=expected,
        base=None if base is None else float(base), initial_skill=initial,
    )


def _steps_from(section) -> ConstantStep | UniformStep:
    if isinstance(section, (int, float)):
        return ConstantStep(float(section))
    if section.get("kind") == "constant":
        return ConstantStep(float(section["value"]))
    if section.get("kind") == "uniform":
        return UniformStep(tuple(float(c) for c in section["choices"]))
    raise InvalidInputError(f"unknown step policy {section!r}")


def _sim_from(config: dict, seed: int) -> SimConfig:
    section = config.get("simulation")
    if section is None:
        raise InvalidInputError("config needs a 'simulation' section (or a synthetic preset)")
    scores = _scores_from(section)
    alpha = section.get("alpha")
    model = ACParams(
        scale=float(section.get("generator_scale", 1.0)),
        hfa=float(section.get("generator_hfa", 0.0)),
        alpha=tuple(float(a) for a in alpha) if alpha is not None else (0.0,) * scores.levels,
        scores=scores,
    )
    return SimConfig(
        players=int(section["players"]),
        matches=int(section["matches"]),
        skill_variance=float(section["skill_variance"]),
        model=model,
        steps=_steps_from(section.get("step", 20)),
        hfa_fraction=float(section.get("hfa_fraction", 1.0)),
        seed=seed,
    )


def _rule_from(config: dict) -> DiscretizationRule | None:
    section = config.get("rule")
    if section is None:
        return None
    if section == "five-level":
        return DiscretizationRule.five_level_goal_diff()
    return DiscretizationRule(tuple(int(c) for c in section["cuts"]))


def _online_from(section) -> OnlineSettings:
    if section is None:
        return OnlineSettings()
    return OnlineSettings(
        window=int(section.get("window", 100)),
        step_size=float(section.get("step_size", 0.1)),
        gamma0=float(section.get("gamma0", 1.0)),
    )


def _seed_of(config: dict) -> int:
    return int(config.get("seed", 0))


def _resolve_preset(config: dict):
    name = config.get("preset")
    if name not in _SYNTHETIC_PRESETS:
        return None
    kwargs: dict[str, Any] = {"seed": _seed_of(config)}
    if "step" in config:
        kwargs["step"] = config["step"]
    if "realizations" in config:
        kwargs["realizations"] = int(config["realizations"])
    if "matches" in config and name == "example1":
        kwargs["matches"] = int(config["matches"])
    return get_preset(name, **kwargs)


def _load_samples(config: dict, warnings: list[str]) -> tuple[MatchSamples, float, OutcomeScale]:
    """Samples for identification/evaluation from a match file.

    With ``skills_from_columns`` the skill differences come straight from the
    file; otherwise the configured engine ranks the matches first.
    """
    path = config.get("matches")
    if path is None:
        raise InvalidInputError("config needs a 'matches' file")
    table = matchio.read_matches_csv(path, _rule_from(config))
    warnings.extend(table.warnings)
    engine = _engine_from(config)
    if config.get("skills_from_columns"):
        if table.skill_diffs is None:
            raise InvalidInputError(
                "skills_from_columns is set but the file has no skill columns"
            )
        samples = MatchSamples.from_records(table.records, table.skill_diffs)
    else:
        state = SkillState(engine)
        _, trajectory = run_matches(state, table.records, TrajectoryOptions(stride=2**62))
        samples = MatchSamples.from_trajectory(trajectory, table.records)
    return samples, engine.scale, engine.scores


# ---------------------------------------------------------------------------
# pipelines
# ---------------------------------------------------------------------------


def pipeline_simulate(config: dict, out_dir: str | Path) -> PipelineResult:
    """Generate one synthetic realization: a match CSV plus a truth sidecar."""
    out_dir = Path(out_dir)
    preset = _resolve_preset(config)
    sim_config = preset.sim if preset is not None else _sim_from(config, _seed_of(config))
    output = simulate(sim_config)
    paths = {
        "matches": matchio.write_matches_csv(out_dir / "matches.csv", output.matches),
        "sidecar": matchio.write_simulation_sidecar(output, out_dir / "simulation.json"),
    }
    return PipelineResult(paths=paths, warnings=[])


def pipeline_rank(config: dict, out_dir: str | Path) -> PipelineResult:
    """Rank a match file sequentially; write the snapshot and the trajectory."""
    out_dir = Path(out_dir)
    warnings: list[str] = []
    path = config.get("matches")
    if path is None:
        raise InvalidInputError("config needs a 'matches' file")
    table = matchio.read_matches_csv(path, _rule_from(config))
    warnings.extend(table.warnings)
    engine = _engine_from(config)
    if config.get("snapshot"):
        skills, counts, sums = matchio.read_snapshot_csv(config["snapshot"])
        state = SkillState(engine, skills, counts, sums)
    else:
        state = SkillState(engine)
    rank_section = config.get("rank") or {}
    record = rank_section.get("record") or {}
    options = TrajectoryOptions(
        stride=int(record.get("stride", 1)),
        participants=bool(record.get("participants", False)),
    )
    _, trajectory = run_matches(state, table.records, options)
    paths = {
        "snapshot_csv": matchio.write_snapshot_csv(state, out_dir / "snapshot.csv"),
        "snapshot_json": matchio.write_snapshot_json(state, out_dir / "snapshot.json"),
        "trajectory": matchio.write_trajectory_csv(trajectory, out_dir / "trajectory.csv"),
    }
    return PipelineResult(paths=paths, warnings=warnings)


def pipeline_identify(config: dict, out_dir: str | Path) -> PipelineResult:
    """Identify a prediction model from a match file; write the model JSON."""
    out_dir = Path(out_dir)
    warnings: list[str] = []
    samples, scale, scores = _load_samples(config, warnings)
    section = config.get("identify") or {}
    window = section.get("train")
    train_window = None
    if window is not None:
        start = int(window[0])
        stop = int(window[1]) if window[1] is not None else int(samples.t.max()) + 1
        train_window = (start, stop)
        train = samples.window(start, stop)
    else:
        train = samples
    method = section.get("method", "full")
    if method == "full":
        model = fit_full(train, scale, scores, train_window=train_window)
    elif method == "binary":
        model = fit_binary(train, scale, train_window=train_window)
    elif method in ("scale-only", "closed-form"):
        freqs = outcome_frequencies(train, scores)
        alpha = simple_alpha(freqs)
        eta = simple_eta(freqs, alpha)
        if method == "scale-only":
            model = fit_full(
                train, scale, scores,
                constraints=FitConstraints(alpha=tuple(alpha), eta=eta),
                train_window=train_window,
            )
        else:
            model = IdentifiedModel(
                alpha=tuple(alpha), eta=eta, beta=simple_beta(alpha, scores),
                scores=scores, method="closed-form", n_train=len(train),
                train_window=train_window,
            )
    else:
        raise InvalidInputError(f"unknown identification method {method!r}")
    paths = {"model": matchio.write_model_json(model, out_dir / "model.json")}
    if section.get("online"):
        settings = _online_from(section["online"])
        trace = online_gamma(
            samples if train_window is None else samples.window(train_window[0], int(samples.t.max()) + 1),
            model.alpha, model.eta, scale,
            window=settings.window, step_size=settings.step_size,
            gamma0=settings.gamma0, scores=scores,
        )
        paths["gamma_trace"] = matchio.write_gamma_trace_csv(trace, out_dir / "gamma_trace.csv")
    return PipelineResult(paths=paths, warnings=warnings, report=model)


def pipeline_evaluate(config: dict, out_dir: str | Path) -> PipelineResult:
    """Multi-method comparison; writes the JSON and text reports (plus traces)."""
    out_dir = Path(out_dir)
    warnings: list[str] = []
    section = config.get("evaluation") or {}
    preset = _resolve_preset(config)
    if preset is not None:
        spec = EvaluationSpec(
            train=tuple(section.get("train", preset.train)),
            test=tuple(section.get("test", preset.test)),
            methods=tuple(section.get("methods", preset.methods)),
        )
        report = run_comparison(
            spec, preset,
            realizations=section.get("realizations"),
            online=_online_from(section.get("online")),
        )
    else:
        samples, scale, scores = _load_samples(config, warnings)
        test = section.get("test")
        if test is None or section.get("train") is None or not section.get("methods"):
            raise InvalidInputError("evaluation needs train/test windows and methods")
        test_stop = int(test[1]) if test[1] is not None else int(samples.t.max()) + 1
        spec = EvaluationSpec(
            train=tuple(int(v) for v in section["train"]),
            test=(int(test[0]), test_stop),
            methods=tuple(section["methods"]),
        )
        data = DataContext(
            samples=samples,
            scale=scale,
            scores=scores,
            nominal_eta=float(section.get("nominal_eta", 0.0)),
            online=_online_from(section.get("online")),
        )
        report = run_comparison(spec, data)

    for row in report.rows:
        if row.failures:
            warnings.append(f"method {row.method}: {row.failures} failure(s): {row.error}")
    paths = {
        "report_json": matchio.write_json(out_dir / "report.json", report.to_json_dict()),
        "report_text": matchio.atomic_write_text(out_dir / "report.txt", report.to_text()),
    }
    for method, trace in report.traces.items():
        paths[f"trace_{method}"] = matchio.write_gamma_trace_csv(
            trace, out_dir / f"beta_trace_{method}.csv"
        )
    if section.get("export_loglik") and report.test_t is not None:
        for method, rows in report.match_loglik.items():
            paths[f"loglik_{method}"] = matchio.write_loglik_csv(
                report.test_t, rows, out_dir / f"loglik_{method}.csv"
            )
    return PipelineResult(paths=paths, warnings=warnings, report=report)


def pipeline_convergence(config: dict, out_dir: str | Path) -> PipelineResult:
    """Per-player convergence report(s), optionally at calendar checkpoints."""
    out_dir = Path(out_dir)
    warnings: list[str] = []
    path = config.get("matches")
    if path is None:
        raise InvalidInputError("config needs a 'matches' file")
    table = matchio.read_matches_csv(path, _rule_from(config))
    warnings.extend(table.warnings)
    engine = _engine_from(config)
    section = config.get("convergence") or {}
    checkpoints = section.get("checkpoints")
    paths: dict[str, Path] = {}
    if not checkpoints:
        report = convergence_report(table.records, scale=engine.scale)
        paths["convergence"] = matchio.write_convergence_csv(
            report, out_dir / "convergence.csv"
        )
        paths["convergence_json"] = matchio.write_json(
            out_dir / "convergence.json", report.to_json_dict()
        )
        paths["lambda_cdf"] = matchio.write_lambda_cdf_csv(
            report, out_dir / "lambda_cdf.csv"
        )
        return PipelineResult(paths=paths, warnings=warnings, report=report)
    if any(rec.date is None for rec in table.records):
        raise InvalidInputError("calendar checkpoints need dated matches")
    reports = {}
    for checkpoint in checkpoints:
        label = str(checkpoint)
        subset = [rec for rec in table.records if rec.date <= checkpoint]
        if not subset:
            warnings.append(f"checkpoint {label}: no matches on or before it; skipped")
            continue
        report = convergence_report(subset, scale=engine.scale)
        reports[label] = report
        paths[f"convergence_{label}"] = matchio.write_convergence_csv(
            report, out_dir / f"convergence_{label}.csv"
        )
        paths[f"lambda_cdf_{label}"] = matchio.write_lambda_cdf_csv(
            report, out_dir / f"lambda_cdf_{label}.csv"
        )
    return PipelineResult(paths=paths, warnings=warnings, report=reports)


def pipeline_convert_scale(config: dict, out_dir: str | Path) -> PipelineResult:
    """Expose the scale conversions: base change, Gaussian matching, AC matching."""
    out_dir = Path(out_dir)
    section = config.get("convert")
    if not section:
        raise InvalidInputError("config needs a 'convert' section")
    kind = section.get("kind")
    if kind == "base-change":
        conversion = beta_base_change(float(section["base"]))
        # moving FROM base a TO the canonical form divides the scale
        direction = section.get("direction", "to-canonical")
        if direction == "to-canonical":
            factor = conversion.inverse
        elif direction == "from-canonical":
            factor = conversion.factor
        else:
            raise InvalidInputError(f"unknown direction {direction!r}")
    elif kind == "logistic-to-gaussian":
        conversion = beta_logistic_to_gaussian(section.get("method", "derivative"))
        factor = conversion.factor
    elif kind == "ac-to-logistic":
        scores = _scores_from(section)
        params = ACParams(
            scale=1.0, hfa=0.0,
            alpha=tuple(float(a) for a in section["alpha"]), scores=scores,
        )
        conversion = beta_ac_to_logistic(params)
        factor = conversion.factor
    else:
        raise InvalidInputError(f"unknown conversion kind {kind!r}")

    payload: dict[str, Any] = {
        "schema": "elokit-conversion v1",
        "kind": kind,
        "factor": factor,
    }
    if "scale" in section:
        scale = float(section["scale"])
        payload["scale"] = scale
        payload["converted_scale"] = scale * factor
        if "hfa" in section:
            hfa = float(section["hfa"])
            rescaled = rescale_hfa(hfa, factor)
            payload["hfa"] = hfa
            payload["converted_hfa"] = rescaled.eta
            payload["hfa_rule"] = rescaled.rule
            payload["hfa_times_scale"] = hfa * scale
    paths = {"conversion": matchio.write_json(out_dir / "conversion.json", payload)}
    return PipelineResult(paths=paths, warnings=[], report=payload)


PIPELINES: dict[str, Callable[[dict, Path], PipelineResult]] = {
    "simulate": pipeline_simulate,
    "rank": pipeline_rank,
    "identify": pipeline_identify,
    "evaluate": pipeline_evaluate,
    "convergence": pipeline_convergence,
    "convert-scale": pipeline_convert_scale,
}
