"""Config-driven pipelines and the command-line interface."""

from __future__ import annotations

import datetime as dt
import json
import math

import pytest
import yaml

from elokit.cli import main
from elokit.engine import EngineConfig, SkillState, apply_update
from elokit.matchio import read_matches_csv, write_matches_csv
from elokit.simulate import get_preset, simulate
from test_simulate import small_config


def write_config(tmp_path, name, payload) -> str:
    path = tmp_path / name
    path.write_text(yaml.safe_dump(payload), encoding="utf-8")
    return str(path)


def run_cli(*args) -> int:
    return main(list(args))


@pytest.fixture
def sim_csv(tmp_path):
    """A small ternary match file produced by the simulator."""
    preset = get_preset("example4", step=20)
    config = small_config(
        matches=1500, model=preset.sim.model, players=12, seed=21,
    )
    output = simulate(config)
    path = tmp_path / "matches.csv"
    write_matches_csv(path, output.matches)
    return path


ENGINE_SECTION = {"scale": 174.0, "hfa": 0.0, "levels": 3}


class TestSimulatePipeline:
    def test_writes_matches_and_sidecar(self, tmp_path, capsys):
        config = write_config(
            tmp_path, "sim.yaml",
            {
                "seed": 5,
                "simulation": {
                    "players": 6, "matches": 50, "skill_variance": 0.5,
                    "generator_hfa": 0.35, "levels": 2,
                    "step": {"kind": "constant", "value": 20},
                },
            },
        )
        assert run_cli("simulate", "--config", config, "--out-dir", str(tmp_path / "out")) == 0
        table = read_matches_csv(tmp_path / "out" / "matches.csv")
        assert len(table.records) == 50
        sidecar = json.loads((tmp_path / "out" / "simulation.json").read_text())
        assert sidecar["config"]["seed"] == 5

    def test_seed_flag_overrides(self, tmp_path):
        config = write_config(
            tmp_path, "sim.yaml",
            {
                "seed": 5,
                "simulation": {
                    "players": 6, "matches": 30, "skill_variance": 0.5, "levels": 2,
                    "step": {"kind": "constant", "value": 20},
                },
            },
        )
        run_cli("simulate", "--config", config, "--out-dir", str(tmp_path / "a"))
        run_cli("simulate", "--config", config, "--seed", "9", "--out-dir", str(tmp_path / "b"))
        run_cli("simulate", "--config", config, "--seed", "9", "--out-dir", str(tmp_path / "c"))
        a = (tmp_path / "a" / "matches.csv").read_bytes()
        b = (tmp_path / "b" / "matches.csv").read_bytes()
        c = (tmp_path / "c" / "matches.csv").read_bytes()
        assert a != b and b == c


class TestRankPipeline:
    def test_rank_outputs(self, tmp_path, sim_csv):
        config = write_config(
            tmp_path, "rank.yaml", {"matches": str(sim_csv), "engine": ENGINE_SECTION}
        )
        out = tmp_path / "ranked"
        assert run_cli("rank", "--config", config, "--out-dir", str(out)) == 0
        snapshot = (out / "snapshot.csv").read_text().splitlines()
        assert snapshot[0] == "# elokit-snapshot v1"
        assert (out / "snapshot.json").exists()
        assert (out / "trajectory.csv").exists()

    def test_rank_determinism(self, tmp_path, sim_csv):
        config = write_config(
            tmp_path, "rank.yaml", {"matches": str(sim_csv), "engine": ENGINE_SECTION}
        )
        run_cli("rank", "--config", config, "--out-dir", str(tmp_path / "r1"))
        run_cli("rank", "--config", config, "--out-dir", str(tmp_path / "r2"))
        assert (tmp_path / "r1" / "snapshot.csv").read_bytes() == (
            tmp_path / "r2" / "snapshot.csv"
        ).read_bytes()

    def test_snapshot_carry_over(self, tmp_path, sim_csv):
        base = write_config(
            tmp_path, "rank.yaml", {"matches": str(sim_csv), "engine": ENGINE_SECTION}
        )
        run_cli("rank", "--config", base, "--out-dir", str(tmp_path / "first"))
        carried = write_config(
            tmp_path, "carry.yaml",
            {
                "matches": str(sim_csv),
                "engine": ENGINE_SECTION,
                "snapshot": str(tmp_path / "first" / "snapshot.csv"),
            },
        )
        assert run_cli("rank", "--config", carried, "--out-dir", str(tmp_path / "second")) == 0
        assert (tmp_path / "second" / "snapshot.csv").read_bytes() != (
            tmp_path / "first" / "snapshot.csv"
        ).read_bytes()


class TestIdentifyPipeline:
    def test_full_fit(self, tmp_path, sim_csv):
        config = write_config(
            tmp_path, "id.yaml",
            {
                "matches": str(sim_csv),
                "engine": ENGINE_SECTION,
                "identify": {"method": "full", "train": [200, 1500]},
            },
        )
        out = tmp_path / "ident"
        assert run_cli("identify", "--config", config, "--out-dir", str(out)) == 0
        model = json.loads((out / "model.json").read_text())
        assert model["method"] == "fully-adaptive"
        assert model["train_window"] == [200, 1500]
        assert model["beta"] > 0

    def test_online_trace(self, tmp_path, sim_csv):
        config = write_config(
            tmp_path, "id.yaml",
            {
                "matches": str(sim_csv),
                "engine": ENGINE_SECTION,
                "identify": {
                    "method": "closed-form",
                    "train": [0, 800],
                    "online": {"window": 50, "step_size": 0.1},
                },
            },
        )
        out = tmp_path / "ident2"
        assert run_cli("identify", "--config", config, "--out-dir", str(out)) == 0
        trace = (out / "gamma_trace.csv").read_text().splitlines()
        assert trace[0] == "# elokit-gamma-trace v1"

    def test_degenerate_data_exits_2(self, tmp_path):
        # all matches on neutral ground: the home advantage is unidentifiable
        output = simulate(small_config(matches=200, hfa_fraction=0.0, seed=3))
        path = tmp_path / "neutral.csv"
        write_matches_csv(path, output.matches)
        config = write_config(
            tmp_path, "id.yaml",
            {
                "matches": str(path),
                "engine": {"scale": 174.0, "hfa": 0.0, "levels": 2},
                "identify": {"method": "full"},
            },
        )
        assert run_cli("identify", "--config", config, "--out-dir", str(tmp_path)) == 2


class TestEvaluatePipeline:
    def test_synthetic_preset(self, tmp_path, capsys):
        config = write_config(
            tmp_path, "eval.yaml",
            {"preset": "example4", "step": 60, "seed": 2, "realizations": 2},
        )
        out = tmp_path / "eval"
        assert run_cli("evaluate", "--config", config, "--out-dir", str(out)) == 0
        report = json.loads((out / "report.json").read_text())
        methods = [row["method"] for row in report["rows"]]
        assert methods[0] == "conventional" and "ground-truth" in methods
        text = (out / "report.txt").read_text()
        assert "gelo-reference" in text

    def test_fifa_style_stand_in(self, tmp_path):
        # miniature synthetic replica of the supplied-ratings pipeline:
        # rank once, export the pre-match skills, evaluate from the columns
        preset = get_preset("example4", step=20)
        output = simulate(
            small_config(matches=2000, model=preset.sim.model, players=12, seed=8)
        )
        state = SkillState(EngineConfig.elo(scale=174.0, scores=preset.engine.scores))
        pre_skills = []
        for record in output.matches:
            pre_skills.append((state.skill(record.home), state.skill(record.away)))
            apply_update(state, record)
        path = tmp_path / "supplied.csv"
        write_matches_csv(path, output.matches, pre_skills=pre_skills)

        config = write_config(
            tmp_path, "fifa.yaml",
            {
                "preset": "fifa",
                "matches": str(path),
                "engine": {"scale": 174.0, "levels": 3},
                "evaluation": {
                    "train": [500, 1200], "test": [1200, None], "export_loglik": True,
                },
            },
        )
        out = tmp_path / "fifa-out"
        assert run_cli("evaluate", "--config", config, "--out-dir", str(out)) == 0
        report = json.loads((out / "report.json").read_text())
        rows = {row["method"]: row for row in report["rows"]}
        assert set(rows) == {
            "conventional", "simple-no-hfa", "simple-with-hfa",
            "optimal-scaling", "online-adaptive", "fully-adaptive",
        }
        for row in rows.values():
            assert row["failures"] == 0, row
            assert row["log_score"] > 0
        assert (out / "beta_trace_online-adaptive.csv").exists()
        loglik = (out / "loglik_conventional.csv").read_text().splitlines()
        assert loglik[0] == "# elokit-logscores v1" and loglik[1] == "t,loglik"
        # decoupled methods beat the conventional baseline on this replica too
        assert rows["fully-adaptive"]["log_score"] < rows["conventional"]["log_score"]

    def test_overlapping_windows_rejected(self, tmp_path, sim_csv):
        config = write_config(
            tmp_path, "eval.yaml",
            {
                "matches": str(sim_csv),
                "engine": ENGINE_SECTION,
                "evaluation": {
                    "train": [0, 800], "test": [700, 1500],
                    "methods": ["conventional"],
                },
            },
        )
        assert run_cli("evaluate", "--config", config, "--out-dir", str(tmp_path)) == 1


class TestConvergencePipeline:
    def test_single_report(self, tmp_path, sim_csv):
        config = write_config(
            tmp_path, "conv.yaml", {"matches": str(sim_csv), "engine": ENGINE_SECTION}
        )
        out = tmp_path / "conv"
        assert run_cli("convergence", "--config", config, "--out-dir", str(out)) == 0
        assert (out / "convergence.csv").exists()
        assert (out / "lambda_cdf.csv").exists()

    def test_checkpoints(self, tmp_path):
        output = simulate(small_config(matches=300, seed=9))
        start = dt.date(2019, 1, 1)
        dated = [
            type(rec)(
                t=rec.t, home=rec.home, away=rec.away, outcome=rec.outcome,
                venue=rec.venue, step=rec.step, date=start + dt.timedelta(days=7 * rec.t),
            )
            for rec in output.matches
        ]
        path = tmp_path / "dated.csv"
        write_matches_csv(path, dated)
        config = write_config(
            tmp_path, "conv.yaml",
            {
                "matches": str(path),
                "engine": {"scale": 174.0, "hfa": 0.35, "levels": 2},
                "convergence": {
                    "checkpoints": [dt.date(2020, 12, 31), dt.date(2022, 12, 31),
                                    dt.date(2024, 12, 31)],
                },
            },
        )
        out = tmp_path / "checkpoints"
        assert run_cli("convergence", "--config", config, "--out-dir", str(out)) == 0
        for year in (2020, 2022, 2024):
            assert (out / f"convergence_{year}-12-31.csv").exists()
            assert (out / f"lambda_cdf_{year}-12-31.csv").exists()

    def test_empty_match_log_fails(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text(
            "# elokit-matches v1\n"
            "date,home_id,away_id,outcome,home_points,away_points,neutral,step_k,"
            "home_skill,away_skill\n"
        )
        config = write_config(
            tmp_path, "conv.yaml", {"matches": str(path), "engine": ENGINE_SECTION}
        )
        assert run_cli("convergence", "--config", config, "--out-dir", str(tmp_path)) == 1


class TestConvertScale:
    def test_base_change_reference(self, tmp_path):
        config = write_config(
            tmp_path, "conv.yaml",
            {
                "convert": {
                    "kind": "base-change", "base": 10, "direction": "to-canonical",
                    "scale": 400.0, "hfa": 0.25,
                },
            },
        )
        out = tmp_path / "convert"
        assert run_cli("convert-scale", "--config", config, "--out-dir", str(out)) == 0
        payload = json.loads((out / "conversion.json").read_text())
        assert payload["converted_scale"] == pytest.approx(173.7177928, abs=1e-6)
        assert payload["converted_hfa"] == pytest.approx(0.5756462732, abs=1e-9)
        assert payload["converted_hfa"] * payload["converted_scale"] == pytest.approx(100.0)

    def test_ac_conversion(self, tmp_path):
        config = write_config(
            tmp_path, "conv.yaml",
            {
                "convert": {
                    "kind": "ac-to-logistic", "levels": 3,
                    "alpha": [0.0, math.log(2.0), 0.0],
                },
            },
        )
        out = tmp_path / "convert2"
        assert run_cli("convert-scale", "--config", config, "--out-dir", str(out)) == 0
        payload = json.loads((out / "conversion.json").read_text())
        assert payload["factor"] == pytest.approx(2.0)


class TestCliErrors:
    def test_missing_config(self, tmp_path):
        assert run_cli("rank", "--config", str(tmp_path / "absent.yaml")) == 1

    def test_unknown_preset(self, tmp_path):
        config = write_config(tmp_path, "bad.yaml", {"preset": "example99"})
        assert run_cli("evaluate", "--config", config) == 1
