"""Synthetic data generation: determinism, distributional checks, replication protocol."""

from __future__ import annotations

import math

import numpy as np
import pytest

from elokit.engine import EngineConfig
from elokit.exceptions import InvalidInputError
from elokit.outcomes import ACParams, OutcomeScale, ac_table
from elokit.simulate import (
    ConstantStep,
    SimConfig,
    UniformStep,
    generate_skills,
    get_preset,
    iter_outputs,
    run_replications,
    sample_outcome,
    schedule_round,
    simulate,
)

from conftest import rng


def small_config(**overrides) -> SimConfig:
    defaults = dict(
        players=8,
        matches=400,
        skill_variance=0.5,
        model=ACParams.binary(scale=1.0, hfa=0.35),
        steps=ConstantStep(20.0),
        hfa_fraction=1.0,
        seed=123,
    )
    defaults.update(overrides)
    return SimConfig(**defaults)


class TestGenerateSkills:
    def test_sample_variance(self):
        config = small_config(players=100_000)
        skills = generate_skills(config)
        assert np.var(skills) == pytest.approx(0.5, rel=0.02)
        assert np.mean(skills) == pytest.approx(0.0, abs=0.02)

    def test_near_zero_variance_limit(self):
        config = small_config(skill_variance=1e-300)
        assert np.allclose(generate_skills(config), 0.0, atol=1e-140)

    def test_seed_determinism(self):
        config = small_config()
        np.testing.assert_array_equal(generate_skills(config), generate_skills(config))


class TestScheduleRound:
    def test_never_self_paired(self):
        config = small_config(players=5)
        generator = rng(40)
        for _ in range(20000):
            i, j = schedule_round(config, generator)
            assert i != j
            assert 0 <= i < 5 and 0 <= j < 5

    def test_marginal_frequencies(self):
        config = small_config(players=10, matches=100_000)
        output = simulate(config)
        appearances = np.zeros(10)
        for rec in output.matches:
            appearances[rec.home] += 1
            appearances[rec.away] += 1
        # each match picks a player with marginal probability 2 / M
        n = config.matches
        p = 2.0 / 10.0
        sigma = math.sqrt(n * p * (1 - p))
        assert np.all(np.abs(appearances - n * p) < 3.5 * sigma)


class TestSampleOutcome:
    def test_extreme_difference(self):
        config = small_config(model=ACParams.binary(scale=1.0))
        generator = rng(41)
        draws = [sample_outcome(40.0, config, generator, venue=0) for _ in range(500)]
        assert all(d == 1 for d in draws)

    def test_multinomial_frequencies(self):
        truth = ACParams.symmetric(1.0, 0.35, OutcomeScale.uniform(3), [-0.4])
        config = small_config(model=truth, players=2)
        generator = rng(42)
        n = 300_000
        z_star = 0.3
        counts = np.zeros(3)
        for _ in range(n):
            counts[sample_outcome(z_star, config, generator, venue=1)] += 1
        expected = ac_table(np.asarray(truth.alpha), truth.scores.as_array(),
                            z_star + 0.35)[0]
        sigma = np.sqrt(n * expected * (1 - expected))
        assert np.all(np.abs(counts - n * expected) < 3.5 * sigma)

    def test_neutral_draw_frequency(self):
        # frequency of the middle outcome at z*=0 equals exp(-0.4)/(2+exp(-0.4))
        truth = ACParams.symmetric(1.0, 0.35, OutcomeScale.uniform(3), [-0.4])
        config = small_config(model=truth)
        generator = rng(43)
        n = 200_000
        draws = sum(
            sample_outcome(0.0, config, generator, venue=0) == 1 for _ in range(n)
        )
        expected = math.exp(-0.4) / (2.0 + math.exp(-0.4))
        assert expected == pytest.approx(0.251, abs=5e-4)
        sigma = math.sqrt(expected * (1 - expected) / n)
        assert draws / n == pytest.approx(expected, abs=3.5 * sigma)


class TestSimulate:
    def test_bit_determinism(self):
        config = small_config()
        a, b = simulate(config), simulate(config)
        np.testing.assert_array_equal(a.true_skills, b.true_skills)
        np.testing.assert_array_equal(a.true_diffs, b.true_diffs)
        assert a.matches == b.matches

    def test_true_diffs_exact(self):
        output = simulate(small_config())
        for rec, diff in zip(output.matches, output.true_diffs):
            assert output.true_skills[rec.home] - output.true_skills[rec.away] == diff

    def test_hfa_fraction(self):
        all_home = simulate(small_config(hfa_fraction=1.0))
        assert all(rec.venue == 1 for rec in all_home.matches)
        neutral = simulate(small_config(hfa_fraction=0.0))
        assert all(rec.venue == 0 for rec in neutral.matches)
        mixed = simulate(small_config(hfa_fraction=0.5, matches=4000))
        fraction = np.mean([rec.venue for rec in mixed.matches])
        assert fraction == pytest.approx(0.5, abs=0.05)

    def test_step_policies(self):
        constant = simulate(small_config(steps=ConstantStep(60.0)))
        assert all(rec.step == 60.0 for rec in constant.matches)
        random_steps = simulate(small_config(steps=UniformStep((10.0, 20.0, 30.0))))
        seen = {rec.step for rec in random_steps.matches}
        assert seen == {10.0, 20.0, 30.0}

    def test_step_policy_does_not_shift_other_streams(self):
        # same seed, different constant step: identical schedule and outcomes
        a = simulate(small_config(steps=ConstantStep(20.0)))
        b = simulate(small_config(steps=ConstantStep(60.0)))
        assert [(m.home, m.away, m.outcome, m.venue) for m in a.matches] == [
            (m.home, m.away, m.outcome, m.venue) for m in b.matches
        ]

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            small_config(players=1)
        with pytest.raises(InvalidInputError):
            small_config(matches=0)
        with pytest.raises(InvalidInputError):
            small_config(hfa_fraction=1.5)


class TestReplications:
    def test_single_replication_equals_simulate(self):
        config = small_config()
        replication = run_replications(config, EngineConfig.elo(scale=174.0, hfa=0.35), 1)[0]
        direct = simulate(config)
        assert replication.output.matches == direct.matches
        np.testing.assert_array_equal(replication.output.true_skills, direct.true_skills)

    def test_realizations_are_independent_but_share_skills(self):
        config = small_config()
        outputs = list(iter_outputs(config, 3))
        for output in outputs[1:]:
            np.testing.assert_array_equal(output.true_skills, outputs[0].true_skills)
        assert outputs[0].matches != outputs[1].matches

    def test_redraw_skills(self):
        config = small_config()
        outputs = list(iter_outputs(config, 2, redraw_skills=True))
        assert not np.array_equal(outputs[0].true_skills, outputs[1].true_skills)

    def test_converged_ensemble_mean_tracks_truth(self):
        # after convergence the ensemble mean approaches the zero-sum
        # projection of the rescaled true skills
        config = small_config(players=6, matches=3000, seed=5)
        engine = EngineConfig.elo(scale=174.0, hfa=0.35)
        finals = []
        for replication in run_replications(config, engine, 60):
            state = replication.state
            finals.append([state.skill(p) for p in range(6)])
        finals = np.asarray(finals)
        target = 174.0 * (
            np.asarray(simulate(config).true_skills)
            - np.mean(simulate(config).true_skills)
        )
        se = finals.std(axis=0, ddof=1) / math.sqrt(len(finals))
        assert np.all(np.abs(finals.mean(axis=0) - target) < 4.0 * se + 2.0)


class TestPresets:
    def test_lookup_and_arms(self):
        p1 = get_preset("example1", step="random")
        assert isinstance(p1.sim.steps, UniformStep)
        assert p1.engine.scale == 174.0 and p1.engine.hfa == 0.35
        p1_fixed = get_preset("example1", step=60)
        assert p1_fixed.sim.steps == ConstantStep(60.0)

        p2 = get_preset("example2")
        assert p2.train == (2000, 4000) and p2.test == (4000, 6000)
        assert p2.noise is not None
        assert p2.noise.estimation_variance == pytest.approx(1740.0)

        p4 = get_preset("example4", step=20)
        assert p4.sim.model.alpha == (0.0, -0.4, 0.0)
        assert p4.engine.hfa == 0.0
        assert p4.gelo_engine is not None
        assert p4.gelo_engine.hfa == 0.35
        assert p4.train == (4000, 8000) and p4.test == (8000, 12001)

    def test_unknown_preset(self):
        with pytest.raises(InvalidInputError):
            get_preset("example99")
