"""File formats: match CSVs, rating snapshots, trajectories, reports.

Every CSV starts with a version comment line, ``# elokit-<kind> v<major>``;
readers reject files whose kind or major version they do not understand.
All writes are atomic (temp file in the target directory, then rename).

Match CSV columns (schema ``elokit-matches v1``)::

    date,home_id,away_id,outcome,home_points,away_points,neutral,step_k,home_skill,away_skill

``date`` is ISO-8601 or empty.  Exactly one of ``outcome`` (an index) or the
points pair must be filled; the points route needs a
:class:`DiscretizationRule`.  ``neutral`` is 1 on neutral ground (so the
venue flag of the record is its complement).  The skill columns, when
present, carry externally computed pre-match skills, for pipelines that
consume ratings produced elsewhere.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import logging
import math
import os
import tempfile
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .engine import MatchRecord, SkillState, Trajectory
from .exceptions import InvalidInputError, SchemaError
from .identify import GammaTrace, IdentifiedModel
from .outcomes import ACParams, OutcomeScale
from .simulate import ConstantStep, SimConfig, SimOutput, UniformStep

__all__ = [
    "DiscretizationRule",
    "MatchTable",
    "atomic_write_text",
    "write_matches_csv",
    "read_matches_csv",
    "ingest_matches",
    "write_snapshot_csv",
    "read_snapshot_csv",
    "write_snapshot_json",
    "write_trajectory_csv",
    "write_convergence_csv",
    "write_lambda_cdf_csv",
    "write_gamma_trace_csv",
    "write_loglik_csv",
    "write_model_json",
    "read_model_json",
    "write_simulation_sidecar",
    "read_simulation_sidecar",
    "write_json",
]

logger = logging.getLogger(__name__)

_MATCH_COLUMNS = (
    "date",
    "home_id",
    "away_id",
    "outcome",
    "home_points",
    "away_points",
    "neutral",
    "step_k",
    "home_skill",
    "away_skill",
)


def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write via a temp file in the same directory, then rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise
    return path


def write_json(path: str | Path, payload: dict) -> Path:
    return atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def _version_line(kind: str) -> str:
    return f"# elokit-{kind} v1"


def _check_version(first_line: str, kind: str, path) -> None:
    line = first_line.strip()
    prefix = f"# elokit-{kind} v"
    if not line.startswith(prefix):
        raise SchemaError(f"{path}: expected a '{prefix}<major>' version line, got {line!r}")
    version = line[len(prefix):]
    try:
        major = int(version.split(".")[0])
    except ValueError:
        raise SchemaError(f"{path}: unparseable schema version {version!r}") from None
    if major != 1:
        raise SchemaError(f"{path}: unsupported {kind} schema major version {major}")


# ---------------------------------------------------------------------------
# discretization of point differences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscretizationRule:
    """Maps an integer point difference to an outcome index via half-open cells.

    ``cuts`` are the strictly increasing left edges of cells 1..L-1; the
    outcome index is the number of cuts at or below the difference.  For an
    odd number of levels the cells must mirror around zero.
    """

    cuts: tuple[int, ...]

    def __post_init__(self) -> None:
        cuts = tuple(int(c) for c in self.cuts)
        object.__setattr__(self, "cuts", cuts)
        if not cuts:
            raise InvalidInputError("need at least one cut")
        if any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise InvalidInputError("cuts must be strictly increasing")
        if self.levels % 2 == 1:
            # mirror of cell [c_k, c_{k+1}) over the integers is [1-c_{k+1}, 1-c_k)
            n = len(cuts)
            if any(cuts[i] + cuts[n - 1 - i] != 1 for i in range(n)):
                raise InvalidInputError(
                    "with an odd number of levels the cells must be symmetric about 0"
                )

    @property
    def levels(self) -> int:
        return len(self.cuts) + 1

    def outcome(self, diff: int) -> int:
        return bisect_right(self.cuts, int(diff))

    @classmethod
    def five_level_goal_diff(cls) -> "DiscretizationRule":
        """Strong loss / loss / draw / win / strong win at goal differences +-3."""
        return cls((-2, 0, 1, 3))


# ---------------------------------------------------------------------------
# match CSV
# ---------------------------------------------------------------------------


def _fmt_float(value: float) -> str:
    return repr(float(value))


def write_matches_csv(
    path: str | Path,
    records: Sequence[MatchRecord],
    pre_skills: Sequence[tuple[float, float]] | None = None,
) -> Path:
    """Write a match log; `pre_skills` optionally adds the skill columns."""
    if pre_skills is not None and len(pre_skills) != len(records):
        raise InvalidInputError("pre_skills must align with the match records")
    buffer = io.StringIO()
    buffer.write(_version_line("matches") + "\n")
    writer = csv.writer(buffer)
    writer.writerow(_MATCH_COLUMNS)
    for idx, rec in enumerate(records):
        skills = ("", "") if pre_skills is None else tuple(map(_fmt_float, pre_skills[idx]))
        writer.writerow(
            [
                rec.date.isoformat() if rec.date is not None else "",
                rec.home,
                rec.away,
                rec.outcome,
                "",
                "",
                1 - rec.venue,
                _fmt_float(rec.step),
                skills[0],
                skills[1],
            ]
        )
    return atomic_write_text(path, buffer.getvalue())


@dataclass
class MatchTable:
    """Parsed match file: records plus optional externally supplied skills."""

    records: list[MatchRecord]
    skill_diffs: np.ndarray | None
    warnings: list[str]


def _parse_id(cell: str):
    try:
        value = int(cell)
        if str(value) == cell:
            return value
    except ValueError:
        pass
    return cell


def read_matches_csv(path: str | Path, rule: DiscretizationRule | None = None) -> MatchTable:
    """Parse and validate a match CSV; see the module docstring for the schema."""
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if not first:
            raise SchemaError(f"{path}: empty file")
        _check_version(first, "matches", path)
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: missing header row")
        missing = {"date", "home_id", "away_id", "neutral", "step_k"} - set(reader.fieldnames)
        if missing:
            raise SchemaError(f"{path}: missing columns {sorted(missing)}")

        rows = []
        warnings: list[str] = []
        for line_no, row in enumerate(reader, start=3):
            try:
                rows.append(_parse_match_row(row, rule))
            except (InvalidInputError, ValueError) as exc:
                raise SchemaError(f"{path}: line {line_no}: {exc}") from None

    dates = [r["date"] for r in rows]
    has_date = [d is not None for d in dates]
    if rows and all(has_date):
        ordered = sorted(range(len(rows)), key=lambda k: dates[k])
        if ordered != list(range(len(rows))):
            warnings.append("match dates are not monotone; applied a stable sort by date")
            rows = [rows[k] for k in ordered]
    elif any(has_date) and not all(has_date):
        warnings.append("some rows lack dates; keeping file order")

    seen = set()
    records = []
    diffs = []
    any_skills = any(r["skills"] is not None for r in rows)
    for t, row in enumerate(rows):
        if row["date"] is not None:
            # undated rematches are normal; only dated repeats are suspicious
            key = (row["date"], row["home"], row["away"])
            if key in seen:
                warnings.append(f"duplicate match {key}")
            seen.add(key)
        if any_skills and row["skills"] is None:
            raise SchemaError(f"{path}: skills are present for some rows but not all")
        records.append(
            MatchRecord(
                t=t,
                home=row["home"],
                away=row["away"],
                outcome=row["outcome"],
                venue=row["venue"],
                step=row["step"],
                date=row["date"],
            )
        )
        if any_skills:
            home_skill, away_skill = row["skills"]
            diffs.append(home_skill - away_skill)

    for message in warnings:
        logger.warning("%s: %s", path, message)
    return MatchTable(
        records=records,
        skill_diffs=np.asarray(diffs) if any_skills else None,
        warnings=warnings,
    )


def _parse_match_row(row: dict, rule: DiscretizationRule | None) -> dict:
    def cell(name: str) -> str:
        return (row.get(name) or "").strip()

    date_cell = cell("date")
    date = dt.date.fromisoformat(date_cell) if date_cell else None
    home = _parse_id(cell("home_id"))
    away = _parse_id(cell("away_id"))
    if cell("home_id") == "" or cell("away_id") == "":
        raise InvalidInputError("player ids must be non-empty")

    outcome_cell = cell("outcome")
    if outcome_cell:
        outcome = int(outcome_cell)
        if outcome < 0:
            raise InvalidInputError(f"unknown outcome {outcome_cell!r}")
    else:
        hp, ap = cell("home_points"), cell("away_points")
        if not hp or not ap:
            raise InvalidInputError("need either an outcome index or both point columns")
        if rule is None:
            raise InvalidInputError("point columns need a discretization rule")
        outcome = rule.outcome(int(hp) - int(ap))

    neutral = int(cell("neutral") or "0")
    if neutral not in (0, 1):
        raise InvalidInputError(f"neutral flag must be 0 or 1, got {neutral}")
    step = float(cell("step_k"))
    if not (math.isfinite(step) and step > 0):
        raise InvalidInputError(f"step_k must be positive, got {step}")

    hs, as_ = cell("home_skill"), cell("away_skill")
    if (hs == "") != (as_ == ""):
        raise InvalidInputError("home_skill and away_skill must be given together")
    skills = (float(hs), float(as_)) if hs else None
    return {
        "date": date,
        "home": home,
        "away": away,
        "outcome": outcome,
        "venue": 1 - neutral,
        "step": step,
        "skills": skills,
    }


def ingest_matches(
    path: str | Path, rule: DiscretizationRule | None = None
) -> list[MatchRecord]:
    """Validated, chronologically ordered match records from a CSV file."""
    return read_matches_csv(path, rule).records


# ---------------------------------------------------------------------------
# snapshots, trajectories, reports
# ---------------------------------------------------------------------------


def write_snapshot_csv(state: SkillState, path: str | Path) -> Path:
    buffer = io.StringIO()
    buffer.write(_version_line("snapshot") + "\n")
    writer = csv.writer(buffer)
    writer.writerow(["player_id", "skill", "n_matches", "mean_step"])
    for row in state.summary():
        writer.writerow([row.player, _fmt_float(row.skill), row.n_matches,
                         _fmt_float(row.mean_step)])
    return atomic_write_text(path, buffer.getvalue())


def read_snapshot_csv(path: str | Path):
    """Snapshot rows as (skills, match_counts, step_sums) dicts, for carrying ratings over."""
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        first = fh.readline()
        _check_version(first, "snapshot", path)
        reader = csv.DictReader(fh)
        skills, counts, sums = {}, {}, {}
        for row in reader:
            player = _parse_id(row["player_id"])
            n = int(row["n_matches"])
            skills[player] = float(row["skill"])
            counts[player] = n
            sums[player] = float(row["mean_step"]) * n
    return skills, counts, sums


def write_snapshot_json(state: SkillState, path: str | Path) -> Path:
    payload = {
        "schema": "elokit-snapshot v1",
        "players": [
            {
                "player_id": row.player,
                "skill": row.skill,
                "n_matches": row.n_matches,
                "mean_step": row.mean_step,
            }
            for row in state.summary()
        ],
    }
    return write_json(path, payload)


def write_trajectory_csv(trajectory: Trajectory, path: str | Path) -> Path:
    """Snapshot series as rows of (t, player_id, skill)."""
    buffer = io.StringIO()
    buffer.write(_version_line("trajectory") + "\n")
    writer = csv.writer(buffer)
    writer.writerow(["t", "player_id", "skill"])
    for t, snapshot in zip(trajectory.snapshot_times, trajectory.snapshots):
        for player, skill in snapshot.items():
            writer.writerow([t, player, _fmt_float(skill)])
    return atomic_write_text(path, buffer.getvalue())


def write_convergence_csv(report, path: str | Path) -> Path:
    buffer = io.StringIO()
    buffer.write(_version_line("convergence") + "\n")
    writer = csv.writer(buffer)
    writer.writerow(["player_id", "n_matches", "mean_step", "time_constant", "lambda"])
    for row in report.players:
        tau = "" if math.isinf(row.time_constant) else _fmt_float(row.time_constant)
        writer.writerow(
            [row.player, row.n_matches, _fmt_float(row.mean_step), tau,
             _fmt_float(row.lambda_elapsed)]
        )
    return atomic_write_text(path, buffer.getvalue())


def write_lambda_cdf_csv(report, path: str | Path) -> Path:
    buffer = io.StringIO()
    buffer.write(_version_line("lambda-cdf") + "\n")
    writer = csv.writer(buffer)
    writer.writerow(["lambda", "fraction_of_players"])
    for lam, fraction in report.lambda_cdf():
        writer.writerow([_fmt_float(lam), _fmt_float(fraction)])
    return atomic_write_text(path, buffer.getvalue())


def write_loglik_csv(t, loglik, path: str | Path) -> Path:
    """Per-match predictive log-likelihoods as (t, loglik) rows."""
    buffer = io.StringIO()
    buffer.write(_version_line("logscores") + "\n")
    writer = csv.writer(buffer)
    writer.writerow(["t", "loglik"])
    for idx, value in zip(t, loglik):
        writer.writerow([int(idx), _fmt_float(value)])
    return atomic_write_text(path, buffer.getvalue())


def write_gamma_trace_csv(trace: GammaTrace, path: str | Path) -> Path:
    buffer = io.StringIO()
    buffer.write(_version_line("gamma-trace") + "\n")
    writer = csv.writer(buffer)
    writer.writerow(["t", "gamma", "beta"])
    for t, gamma in zip(trace.t, trace.gamma):
        writer.writerow([int(t), _fmt_float(gamma), _fmt_float(1.0 / gamma)])
    return atomic_write_text(path, buffer.getvalue())


def write_model_json(model: IdentifiedModel, path: str | Path) -> Path:
    return write_json(path, model.to_json_dict())


def read_model_json(path: str | Path, scores: OutcomeScale | None = None) -> IdentifiedModel:
    with Path(path).open("r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if scores is None:
        scores = OutcomeScale.uniform(len(payload.get("alpha", (0, 0))))
    return IdentifiedModel.from_json_dict(payload, scores)


# ---------------------------------------------------------------------------
# simulation sidecar
# ---------------------------------------------------------------------------


def _steps_to_json(policy) -> dict:
    if isinstance(policy, ConstantStep):
        return {"kind": "constant", "value": policy.value}
    return {"kind": "uniform", "choices": list(policy.choices)}


def _steps_from_json(payload: dict):
    if payload["kind"] == "constant":
        return ConstantStep(float(payload["value"]))
    if payload["kind"] == "uniform":
        return UniformStep(tuple(float(c) for c in payload["choices"]))
    raise SchemaError(f"unknown step policy {payload!r}")


def write_simulation_sidecar(output: SimOutput, path: str | Path) -> Path:
    config = output.config
    payload = {
        "schema": "elokit-simulation v1",
        "true_skills": [float(v) for v in output.true_skills],
        "config": {
            "players": config.players,
            "matches": config.matches,
            "skill_variance": config.skill_variance,
            "hfa_fraction": config.hfa_fraction,
            "seed": config.seed,
            "steps": _steps_to_json(config.steps),
            "model": config.model.to_json_dict(),
        },
    }
    return write_json(path, payload)


def read_simulation_sidecar(path: str | Path) -> tuple[np.ndarray, SimConfig]:
    with Path(path).open("r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("schema") != "elokit-simulation v1":
        raise SchemaError(f"{path}: not an elokit-simulation v1 sidecar")
    cfg = payload["config"]
    config = SimConfig(
        players=int(cfg["players"]),
        matches=int(cfg["matches"]),
        skill_variance=float(cfg["skill_variance"]),
        model=ACParams.from_json_dict(cfg["model"]),
        steps=_steps_from_json(cfg["steps"]),
        hfa_fraction=float(cfg["hfa_fraction"]),
        seed=int(cfg["seed"]),
    )
    return np.asarray(payload["true_skills"], dtype=float), config
