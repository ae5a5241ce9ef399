"""Command-line interface.

Subcommands mirror the pipelines: ``simulate``, ``rank``, ``identify``,
``evaluate``, ``convergence`` and ``convert-scale``.  Every run is driven by
a YAML config; ``--seed`` overrides the config seed and ``--out-dir`` sets
where artifacts land.  Exit codes: 0 success (warnings allowed), 1 for
validation/config/file errors, 2 for numerical failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import yaml

from .exceptions import InvalidInputError, NumericalError
from .pipelines import PIPELINES, load_config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elokit",
        description="Online Elo / G-Elo ratings with decoupled prediction models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "simulate": "generate a synthetic match file from a config or preset",
        "rank": "run the sequential rating over a match file",
        "identify": "fit a prediction model from a match file",
        "evaluate": "compare prediction methods by log-score",
        "convergence": "per-player convergence report",
        "convert-scale": "scale/HFA conversions between expected-score families",
    }
    for name, help_text in descriptions.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, type=Path, help="YAML config file")
        cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
        cmd.add_argument("--out-dir", type=Path, default=Path("."), help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config["seed"] = args.seed
        result = PIPELINES[args.command](config, args.out_dir)
    except (InvalidInputError, OSError, yaml.YAMLError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    for message in result.warnings:
        print(f"warning: {message}", file=sys.stderr)
    for label, path in result.paths.items():
        print(f"{label}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
