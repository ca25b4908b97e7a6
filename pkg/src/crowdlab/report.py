"""End-to-end pipeline runs and machine-readable report output.

A run ingests a dataset (CSV pair or a simulated scenario), computes social
weights, optionally the threshold sweep and the unimodality analysis, and
writes ``report.json`` plus one CSV of plot data per figure.  Outputs are
assembled in a temporary directory and moved into place only on success;
identical inputs and seed produce byte-identical output trees.

Every record excluded anywhere in the pipeline appears exactly once in the
report's exclusion table with the first reason that applies, in the order
insufficient_prior, undefined_sw, dip_indeterminate (the last one only bars
the unimodality analysis, not the sweep).
"""

from __future__ import annotations

import io
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .alpha_sweep import (
    DEFAULT_BOOTSTRAP_COUNT,
    AlphaSweepPoint,
    ResampleMode,
    sweep_alpha,
)
from .dataset import parse_dataset, serialize_records, serialize_truths, shown_crowd_map
from .dip import (
    DEFAULT_MC_COUNT,
    DEFAULT_N_MIN,
    DipNullCache,
    DipResult,
    UnimodalityFlag,
    flag_unimodality,
)
from .errors import NoDecisiveEntriesError, ScenarioError
from .simulate import ScenarioSpec, generate_dataset
from .social_weight import (
    INSUFFICIENT_PRIOR,
    UNDEFINED_SW,
    ErrorMode,
    classify_records,
    sw_sign_summary,
)
from .unimodality import (
    DIP_FLAG_CLASSES,
    proportion_test,
    sorted_improvement_curve,
    user_subset_improvements,
)

SCHEMA_VERSION = 1
DIP_INDETERMINATE = "dip_indeterminate"

COMMANDS = ("analyze", "sweep", "unimodality", "simulate", "all")


@dataclass(frozen=True)
class RunConfig:
    """Effective parameters of one CLI run (flags over config file)."""

    command: str
    out_dir: str
    records: str | None = None
    truths: str | None = None
    scenario: str | None = None
    min_prior: int = 3
    alpha_grid: str = "-1:1:41"
    bootstrap_count: int = DEFAULT_BOOTSTRAP_COUNT
    dip_mc: int = DEFAULT_MC_COUNT
    dip_n_min: int = DEFAULT_N_MIN
    error_mode: ErrorMode = ErrorMode.ABSOLUTE
    resample_mode: ResampleMode = ResampleMode.POOLED
    seed: int | None = None
    dip_cache: str | None = None

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        for name in ("min_prior", "bootstrap_count", "dip_mc", "dip_n_min"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.seed is not None and self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        if self.command == "simulate":
            if not self.scenario:
                raise ValueError("simulate needs --config with a scenario file")
        elif bool(self.records or self.truths) == bool(self.scenario):
            raise ValueError("provide either --records with --truths, or --scenario")
        if (self.records is None) != (self.truths is None):
            raise ValueError("--records and --truths go together")
        for attr in ("records", "truths", "scenario"):
            path = getattr(self, attr)
            if path is not None and not Path(path).is_file():
                raise FileNotFoundError(f"{attr} file not found: {path}")

    @property
    def effective_seed(self) -> int:
        return 0 if self.seed is None else self.seed


def parse_alpha_grid(spec: str) -> list[float]:
    """Grid spec: 'lo:hi:count' or a comma-separated threshold list."""
    spec = spec.strip()
    if ":" in spec:
        lo_s, hi_s, count_s = spec.split(":")
        lo, hi, count = float(lo_s), float(hi_s), int(count_s)
        if count < 1:
            raise ValueError(f"grid needs >= 1 point, got {count}")
        if count == 1:
            return [lo]
        return [float(a) for a in np.linspace(lo, hi, count)]
    return [float(piece) for piece in spec.split(",") if piece.strip()]


def load_scenario_file(path: str | Path) -> dict:
    path = Path(path)
    if path.suffix.lower() == ".json":
        return json.loads(path.read_text())
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    return tomllib.loads(path.read_text())


def load_scenario(path: str | Path, seed_override: int | None = None) -> ScenarioSpec:
    data = load_scenario_file(path)
    if not isinstance(data, dict):
        raise ScenarioError(f"scenario file {path} must hold a mapping")
    if seed_override is not None:
        data = {**data, "seed": seed_override}
    return ScenarioSpec.from_mapping(data)


# --- CSV renderers ----------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(cell) for cell in row) + "\n")
    return buf.getvalue()


def render_sw_records_csv(results) -> str:
    return _csv(
        ["record_id", "sw", "direction", "improvement", "excluded_reason"],
        [
            [r.record_id, r.sw, r.direction.value, r.individual_improvement, r.excluded_reason]
            for r in results
        ],
    )


def render_sw_sign_counts_csv(table: dict) -> str:
    return _csv(
        ["direction", "improved", "worsened", "unchanged"],
        [[d, row["improved"], row["worsened"], row["unchanged"]] for d, row in table.items()],
    )


def render_alpha_sweep_csv(points: list[AlphaSweepPoint]) -> str:
    return _csv(
        ["alpha", "mean_improvement", "ci_low", "ci_high", "n_records", "flag"],
        [[p.alpha, p.mean_improvement, p.ci_low, p.ci_high, p.n_records, p.flag] for p in points],
    )


def render_proportions_csv(tests: dict) -> str:
    rows = []
    for k, entry in tests.items():
        if "skipped" in entry:
            rows.append([k, None, None, None, None, None, None])
        else:
            rows.append(
                [
                    k,
                    entry["n_improved"],
                    entry["n_worsened"],
                    entry["n_unchanged"],
                    entry["p_hat"],
                    entry["z"],
                    entry["p_value"],
                ]
            )
    return _csv(
        ["class", "n_improved", "n_worsened", "n_unchanged", "p_hat", "z", "p_value"], rows
    )


def render_curves_csv(curves: dict[str, list[float]]) -> str:
    rows = []
    for k, curve in curves.items():
        for rank, value in enumerate(curve):
            rows.append([k, rank, value])
    return _csv(["class", "rank", "improvement"], rows)


def render_user_improvements_csv(entries) -> str:
    return _csv(
        ["round_id", "user_id", "class", "mean_improvement", "n"],
        [[e.round_id, e.user_id, e.k.value, e.mean_improvement, e.n] for e in entries],
    )


def render_dip_flags_csv(flags: dict[str, DipResult]) -> str:
    # raw dip values let external calibrations be compared against ours
    return _csv(
        ["record_id", "n", "dip", "p_value", "flag"],
        [
            [record_id, r.n, r.dip, r.p_value, r.flag.value]
            for record_id, r in sorted(flags.items())
        ],
    )


def render_true_sw_csv(ground_truth: dict[str, float]) -> str:
    return _csv(
        ["record_id", "true_sw"],
        [[record_id, sw] for record_id, sw in sorted(ground_truth.items())],
    )


# --- pipeline ---------------------------------------------------------------


def _point_payload(p: AlphaSweepPoint) -> dict:
    return {
        "alpha": p.alpha,
        "mean_improvement": p.mean_improvement,
        "ci_low": p.ci_low,
        "ci_high": p.ci_high,
        "n_records": p.n_records,
        "flag": p.flag,
    }


def execute(config: RunConfig) -> tuple[dict, dict[str, str]]:
    """Run the configured pipeline; returns (report payload, output files)."""
    config.validate()
    seed = config.effective_seed

    ground_truth: dict[str, float] | None = None
    if config.scenario:
        spec = load_scenario(config.scenario, seed_override=config.seed)
        dataset, ground_truth = generate_dataset(spec)
        input_desc = {"scenario": str(config.scenario), "scenario_seed": spec.seed}
    else:
        dataset = parse_dataset(config.records, config.truths)
        input_desc = {"records": str(config.records), "truths": str(config.truths)}

    report: dict = {
        "schema_version": SCHEMA_VERSION,
        "meta": {
            "command": config.command,
            "package_version": __version__,
            "seed": seed,
            "inputs": input_desc,
        },
        "parameters": {
            "min_prior": config.min_prior,
            "error_mode": config.error_mode.value,
        },
        "dataset": {
            "n_rounds": len(dataset.rounds),
            "n_records": dataset.n_records,
            "n_users": len({rec.user_id for _, _, rec in dataset.records()}),
        },
    }
    files: dict[str, str] = {}

    if config.command == "simulate":
        files["records.csv"] = serialize_records(dataset)
        files["truths.csv"] = serialize_truths(dataset)
        files["true_sw.csv"] = render_true_sw_csv(ground_truth or {})
        report["simulated"] = {"n_exposed": len(ground_truth or {})}
        files["report.json"] = _dump_report(report)
        return report, files

    snapshots = shown_crowd_map(dataset, config.min_prior)
    results = classify_records(
        dataset, config.min_prior, error_mode=config.error_mode, snapshots=snapshots
    )
    exclusions: dict[str, str] = {}
    for res in results:
        if res.excluded_reason is not None:
            exclusions[res.record_id] = res.excluded_reason

    do_analyze = config.command in ("analyze", "all")
    do_sweep = config.command in ("sweep", "all")
    do_unimodality = config.command in ("unimodality", "all")

    if do_analyze:
        report["sw_summary"] = sw_sign_summary(results)
        files["sw_records.csv"] = render_sw_records_csv(results)
        files["sw_sign_counts.csv"] = render_sw_sign_counts_csv(report["sw_summary"])

    if do_sweep:
        grid = parse_alpha_grid(config.alpha_grid)
        points = sweep_alpha(
            dataset,
            results,
            grid=grid,
            B=config.bootstrap_count,
            seed=seed,
            error_mode=config.error_mode,
            resample_mode=config.resample_mode,
        )
        report["parameters"]["alpha_grid"] = [p.alpha for p in points]
        report["parameters"]["bootstrap_count"] = config.bootstrap_count
        report["parameters"]["resample_mode"] = config.resample_mode.value
        report["alpha_sweep"] = {"points": [_point_payload(p) for p in points]}
        files["alpha_sweep.csv"] = render_alpha_sweep_csv(points)

    if do_unimodality:
        cache = DipNullCache(config.dip_cache) if config.dip_cache else None
        flags: dict[str, DipResult] = {}
        for record_id, crowd in snapshots.items():
            if crowd is None:
                continue
            sample, _ = crowd
            flags[record_id] = flag_unimodality(
                sample, n_min=config.dip_n_min, M=config.dip_mc, seed=seed, cache=cache
            )
        for record_id, flag_result in flags.items():
            if flag_result.flag is UnimodalityFlag.INDETERMINATE:
                exclusions.setdefault(record_id, DIP_INDETERMINATE)

        entries = user_subset_improvements(
            dataset, flags, error_mode=config.error_mode, snapshots=snapshots
        )
        tests: dict[str, dict] = {}
        curves: dict[str, list[float]] = {}
        curve_means: dict[str, float | None] = {}
        per_round: dict[str, dict[str, dict[str, int]]] = {}
        for k in DIP_FLAG_CLASSES:
            try:
                t = proportion_test(entries, k)
                tests[k.value] = {
                    "n_improved": t.n_improved,
                    "n_worsened": t.n_worsened,
                    "n_unchanged": t.n_unchanged,
                    "p_hat": t.p_hat,
                    "z": t.z,
                    "p_value": t.p_value,
                }
            except NoDecisiveEntriesError:
                tests[k.value] = {"skipped": "no_decisive_entries"}
            curve = sorted_improvement_curve(entries, k)
            curves[k.value] = curve
            curve_means[k.value] = float(np.mean(curve)) if curve else None
        for e in entries:
            outcome = (
                "improved"
                if e.mean_improvement > 0
                else "worsened" if e.mean_improvement < 0 else "unchanged"
            )
            bucket = per_round.setdefault(e.round_id, {}).setdefault(
                e.k.value, {"improved": 0, "worsened": 0, "unchanged": 0}
            )
            bucket[outcome] += 1

        report["parameters"]["dip_mc"] = config.dip_mc
        report["parameters"]["dip_n_min"] = config.dip_n_min
        report["unimodality"] = {
            "n_entries": {k.value: sum(1 for e in entries if e.k is k) for k in DIP_FLAG_CLASSES},
            "proportion_tests": tests,
            "curve_means": curve_means,
            "per_round_outcomes": per_round,
        }
        files["unimodality_proportions.csv"] = render_proportions_csv(tests)
        files["improvement_curves.csv"] = render_curves_csv(curves)
        files["user_improvements.csv"] = render_user_improvements_csv(entries)
        files["dip_flags.csv"] = render_dip_flags_csv(flags)

    counts: dict[str, int] = {INSUFFICIENT_PRIOR: 0, UNDEFINED_SW: 0}
    if do_unimodality:
        counts[DIP_INDETERMINATE] = 0
    for reason in exclusions.values():
        counts[reason] = counts.get(reason, 0) + 1
    report["exclusions"] = {
        "counts": counts,
        "records": [
            {"record_id": record_id, "reason": reason}
            for record_id, reason in sorted(exclusions.items())
        ],
    }

    files["report.json"] = _dump_report(report)
    return report, files


def _dump_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def write_outputs(out_dir: str | Path, files: dict[str, str]) -> None:
    """Write all outputs atomically: temp directory first, move on success."""
    out_dir = Path(out_dir)
    parent = out_dir.parent if str(out_dir.parent) else Path(".")
    parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".crowdlab-", dir=parent))
    try:
        for name, content in files.items():
            (tmp / name).write_text(content, encoding="utf-8")
        if not out_dir.exists():
            os.replace(tmp, out_dir)
        else:
            for name in files:
                os.replace(tmp / name, out_dir / name)
            tmp.rmdir()
    finally:
        if tmp.exists():
            for leftover in tmp.iterdir():
                leftover.unlink()
            tmp.rmdir()


def run(config: RunConfig) -> dict:
    """Execute the pipeline and write its outputs; returns the report."""
    report, files = execute(config)
    write_outputs(config.out_dir, files)
    return report
