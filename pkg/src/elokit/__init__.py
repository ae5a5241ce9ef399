"""Online Elo / G-Elo ratings with decoupled prediction models.

The package splits rating from prediction.  :mod:`elokit.engine` runs the
sequential updates; :mod:`elokit.identify` estimates the prediction model
(AC biases, home advantage, effective scale) from outcomes and the skills
the ranking produced; :mod:`elokit.diagnostics` quantifies convergence and
estimation noise; :mod:`elokit.evaluate` compares prediction methods by
log-score; :mod:`elokit.simulate` generates reproducible synthetic
benchmarks; :mod:`elokit.matchio` and :mod:`elokit.pipelines` handle files,
configs and the command line.
"""

from .diagnostics import (
    ConvergenceReport,
    EffectiveParams,
    NoiseModel,
    asymptotic_variance,
    convergence_report,
    effective_params,
    expected_trajectory,
    marginalized_win_prob,
    noise_ratio,
    posterior_true_diff,
    superiority_probability,
    temporal_variance,
    time_constant,
)
from .engine import (
    EngineConfig,
    EloScore,
    GEloScore,
    MatchRecord,
    RatingSystem,
    SkillState,
    Trajectory,
    TrajectoryOptions,
    elo_update,
    gelo_update,
    run_matches,
    skill_diff,
)
from .evaluate import (
    DataContext,
    EvaluationReport,
    EvaluationSpec,
    OnlineSettings,
    conventional_model,
    log_score,
    run_comparison,
)
from .exceptions import (
    ConvergenceError,
    DegenerateDataError,
    ElokitError,
    InvalidInputError,
    NumericalError,
    SchemaError,
)
from .identify import (
    ACModelIdentifier,
    FitConstraints,
    GammaTrace,
    IdentifiedModel,
    MatchSamples,
    OutcomeFrequencies,
    fit_binary,
    fit_full,
    online_gamma,
    outcome_frequencies,
    simple_alpha,
    simple_beta,
    simple_eta,
)
from .outcomes import (
    ACParams,
    ConversionKind,
    OutcomeScale,
    ScaleConversion,
    ac_expected_score,
    ac_log_likelihood,
    ac_prob,
    ac_score_residual,
    beta_ac_to_logistic,
    beta_base_change,
    beta_logistic_to_gaussian,
    binomial_ac_params,
    gaussian_cdf,
    logistic,
    logit,
    rescale_hfa,
)
from .simulate import (
    ConstantStep,
    Preset,
    Replication,
    SimConfig,
    SimOutput,
    UniformStep,
    generate_skills,
    get_preset,
    iter_replications,
    run_replications,
    sample_outcome,
    schedule_round,
    simulate,
)

__version__ = "0.1.0"
