"""Command-line entry point.

Subcommands: ``analyze`` (social weights + sign table), ``sweep`` (threshold
sweep), ``unimodality`` (dip-gated analysis), ``simulate`` (synthetic
dataset), ``all`` (full pipeline).  Flags mirror the run configuration in
kebab-case; a TOML/JSON config file can supply any of them, with explicit
flags taking precedence.  ``CROWDLAB_OUT_DIR`` provides the default output
directory.  Every library error maps to a distinct exit code with a
single-line diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import os
import sys

from .alpha_sweep import ResampleMode
from .errors import (
    AlphaRangeError,
    CrowdLabError,
    EmptySampleError,
    EmptySubsetError,
    MalformedRowError,
    MissingFlagError,
    NoDecisiveEntriesError,
    NonPositiveInputError,
    NonPositivePriceError,
    NoRoundsError,
    ScenarioError,
    TooFewPointsError,
    UnknownRoundError,
)
from .report import COMMANDS, RunConfig, load_scenario_file, run
from .social_weight import ErrorMode

EXIT_USAGE = 2
EXIT_CODES: dict[type, int] = {
    MalformedRowError: 3,
    UnknownRoundError: 4,
    NonPositivePriceError: 5,
    NonPositiveInputError: 6,
    AlphaRangeError: 7,
    EmptySubsetError: 8,
    NoRoundsError: 9,
    EmptySampleError: 10,
    TooFewPointsError: 11,
    MissingFlagError: 12,
    NoDecisiveEntriesError: 13,
    ScenarioError: 14,
}

_CONFIG_KEYS = {
    "records",
    "truths",
    "scenario",
    "out",
    "min_prior",
    "alpha_grid",
    "bootstrap_count",
    "dip_mc",
    "dip_n_min",
    "error_mode",
    "resample_mode",
    "seed",
    "dip_cache",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crowdlab",
        description="Social-learning analysis of crowd prediction experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        p = sub.add_parser(command, help=f"run the {command} pipeline")
        p.add_argument("--config", help="TOML/JSON file; for simulate, the scenario itself")
        p.add_argument("--out", help="output directory (default: $CROWDLAB_OUT_DIR)")
        p.add_argument("--seed", type=int, help="random seed (default 0)")
        if command != "simulate":
            p.add_argument("--records", help="records CSV path")
            p.add_argument("--truths", help="truths CSV path")
            p.add_argument("--scenario", help="scenario file to simulate as input")
            p.add_argument("--min-prior", type=int, help="min earlier predictions to show a crowd (default 3)")
            p.add_argument("--error-mode", choices=[m.value for m in ErrorMode])
        if command in ("sweep", "all"):
            p.add_argument("--alpha-grid", help="'lo:hi:count' or comma list (default -1:1:41)")
            p.add_argument("--bootstrap-count", type=int, help="bootstrap replicates per threshold (default 100)")
            p.add_argument("--resample-mode", choices=[m.value for m in ResampleMode])
        if command in ("unimodality", "all"):
            p.add_argument("--dip-mc", type=int, help="Monte-Carlo null size (default 10000)")
            p.add_argument("--dip-n-min", type=int, help="min sample size for the dip test (default 4)")
            p.add_argument("--dip-cache", help="JSON file persisting simulated null distributions")
    return parser


def _load_run_config_file(path: str) -> dict:
    data = load_scenario_file(path)  # same TOML/JSON loader
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must hold a mapping")
    normalized = {}
    for key, value in data.items():
        snake = key.replace("-", "_")
        if snake not in _CONFIG_KEYS:
            raise ValueError(f"unknown config key {key!r} in {path}")
        normalized[snake] = value
    return normalized


def _build_config(args: argparse.Namespace) -> RunConfig:
    if args.command == "simulate":
        if not args.config:
            raise ValueError("simulate needs --config pointing at a scenario file")
        file_params: dict = {}
        scenario: str | None = args.config
    else:
        file_params = _load_run_config_file(args.config) if args.config else {}
        scenario = None

    def pick(name: str, default=None):
        flag = getattr(args, name, None)
        if flag is not None:
            return flag
        return file_params.get(name, default)

    out_dir = pick("out") or os.environ.get("CROWDLAB_OUT_DIR")
    if not out_dir:
        raise ValueError("no output directory: pass --out or set CROWDLAB_OUT_DIR")

    kwargs = dict(
        command=args.command,
        out_dir=str(out_dir),
        scenario=scenario if args.command == "simulate" else pick("scenario"),
        seed=pick("seed"),
    )
    if args.command != "simulate":
        kwargs.update(
            records=pick("records"),
            truths=pick("truths"),
            min_prior=pick("min_prior", 3),
            error_mode=ErrorMode(pick("error_mode", ErrorMode.ABSOLUTE.value)),
        )
    if args.command in ("sweep", "all"):
        kwargs.update(
            alpha_grid=pick("alpha_grid", "-1:1:41"),
            bootstrap_count=pick("bootstrap_count", 100),
            resample_mode=ResampleMode(pick("resample_mode", ResampleMode.POOLED.value)),
        )
    if args.command in ("unimodality", "all"):
        kwargs.update(
            dip_mc=pick("dip_mc", 10_000),
            dip_n_min=pick("dip_n_min", 4),
            dip_cache=pick("dip_cache"),
        )
    return RunConfig(**kwargs)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _build_config(args)
        run(config)
    except CrowdLabError as exc:
        print(f"crowdlab: {exc}", file=sys.stderr)
        return EXIT_CODES.get(type(exc), 1)
    except (ValueError, FileNotFoundError) as exc:
        print(f"crowdlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"wrote {config.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
