"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``).

The criteria are property-based on simulated data with pinned seeds and
tolerances.  Runtime budgets assume the compiled dip kernel; correctness
holds on the pure backend too, but criterion 7 is skipped there because its
Monte-Carlo volume is impractical without the extension.
"""

from __future__ import annotations

import functools
import json
import math
import time

import numpy as np
import pytest
from scipy.special import ndtr

from crowdlab.cli import main
from crowdlab.dip import BACKEND, DipNullCache, dip_pvalue, dip_statistic, flag_unimodality
from crowdlab.dataset import parse_dataset, shown_crowd_map, write_dataset
from crowdlab.report import RunConfig, execute, load_scenario
from crowdlab.simulate import (
    accurate_crowd_scenario,
    generate_dataset,
    unimodality_contrast_dataset,
)
from crowdlab.social_weight import classify_records
from crowdlab.alpha_sweep import sweep_alpha
from crowdlab.unimodality import (
    UnimodalityFlag,
    proportion_test,
    sorted_improvement_curve,
    user_subset_improvements,
)

from dip_oracle import dip_oracle


def criterion(num: int, name: str):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException as exc:
                status = "SKIP" if isinstance(exc, pytest.skip.Exception) else "FAIL"
                print(f"\nacceptance {num:02d} [{name}]: {status}")
                raise
            print(f"\nacceptance {num:02d} [{name}]: PASS")

        return wrapper

    return deco


@criterion(1, "social-weight recovery on a noiseless simulation")
def test_c01_sw_recovery():
    started = time.perf_counter()
    spec = accurate_crowd_scenario(seed=7, n_rounds=6, n_agents=200)
    dataset, ground_truth = generate_dataset(spec)
    results = classify_records(dataset, min_prior=3)
    errors = [
        abs(res.sw - ground_truth[res.record_id])
        for res in results
        if res.sw is not None and res.record_id in ground_truth
    ]
    assert len(errors) == len(ground_truth)  # every exposed record has a defined weight
    assert max(errors) < 1e-9
    assert time.perf_counter() - started < 5.0


@criterion(2, "social-weight closed forms")
def test_c02_sw_closed_forms():
    from crowdlab.social_weight import compute_sw

    assert abs(compute_sw(100.0, 100.0, 200.0) - 0.0) <= 1e-12
    assert abs(compute_sw(100.0, 200.0, 200.0) - 1.0) <= 1e-12
    assert abs(compute_sw(100.0, math.sqrt(100.0 * 200.0), 200.0) - 0.5) <= 1e-12
    assert abs(compute_sw(100.0, 50.0, 200.0) - (-1.0)) <= 1e-12


@criterion(3, "sign of the weight drives the sweep direction")
def test_c03_sweep_direction():
    started = time.perf_counter()
    dataset, _ = generate_dataset(accurate_crowd_scenario(seed=7, n_rounds=6, n_agents=200))
    results = classify_records(dataset, min_prior=3)
    points = sweep_alpha(dataset, results, B=100, seed=7)  # default 41-point grid
    assert len(points) == 41
    for p in points:
        if p.alpha >= 0.25 - 1e-9:
            assert p.mean_improvement > 0, f"alpha={p.alpha}"
        elif p.alpha <= -0.25 + 1e-9:
            assert p.mean_improvement < 0, f"alpha={p.alpha}"
    top = next(p for p in points if abs(p.alpha - 1.0) < 1e-12)
    bottom = next(p for p in points if abs(p.alpha + 1.0) < 1e-12)
    assert top.ci_low > 0
    assert bottom.ci_high < 0
    assert time.perf_counter() - started < 30.0


@criterion(4, "dip equals the brute-force unimodal-fit oracle (n <= 8)")
def test_c04_dip_oracle_equivalence():
    started = time.perf_counter()
    rng = np.random.default_rng(2024)
    checked = 0
    while checked < 500:
        n = int(rng.integers(1, 9))
        kind = checked % 3
        if kind == 0:
            x = rng.normal(size=n) * rng.uniform(0.1, 50)
        elif kind == 1:
            x = rng.random(n)
        else:
            levels = rng.normal(size=max(2, n // 2 + 1))
            x = rng.choice(levels, size=n)
        if np.min(x) == np.max(x):
            continue
        expected = max(dip_oracle(x), 0.5 / n)  # statistic floored at 1/(2n)
        assert abs(dip_statistic(x) - expected) <= 1e-6
        checked += 1
    assert time.perf_counter() - started < 120.0


def _random_sample(rng: np.random.Generator) -> np.ndarray:
    n = int(rng.integers(2, 400))
    kind = rng.integers(0, 3)
    if kind == 0:
        return rng.normal(size=n)
    if kind == 1:
        return np.concatenate([rng.normal(0, 1, n // 2 + 1), rng.normal(7, 1, n // 2 + 1)])[:n]
    levels = rng.normal(size=max(2, n // 6 + 1))
    return rng.choice(levels, size=n)


@criterion(5, "dip bounds, permutation and scale/shift invariance")
def test_c05_dip_bounds_and_invariances():
    rng = np.random.default_rng(55)
    for _ in range(1000):
        x = _random_sample(rng)
        d = dip_statistic(x)
        assert 0.5 / x.size <= d <= 0.25
        assert dip_statistic(rng.permutation(x)) == d
        scaled = 4.0 * x  # binary scaling: exact in floating point
        assert dip_statistic(scaled) == d
        assert dip_statistic(x + 1.0) == pytest.approx(d, rel=1e-9, abs=1e-12)


@criterion(5, "dip invariance under nonlinear increasing maps (spec defect)")
@pytest.mark.xfail(
    strict=True,
    reason=(
        "provably impossible: any statistic matching the unimodal-fit oracle "
        "(criterion 4) depends on gap geometry, so order-isomorphic samples "
        "can have different dips.  Counterexample: equally spaced points (dip "
        "= 1/(2n)) vs their image under an increasing map that forms two "
        "clusters (dip ~ 0.25)."
    ),
)
def test_c05_dip_nonlinear_monotone_invariance():
    ranks = np.arange(1.0, 9.0)
    clustered = np.array([0.0, 0.01, 0.02, 0.03, 10.0, 10.01, 10.02, 10.03])
    assert dip_statistic(clustered) == pytest.approx(dip_statistic(ranks), abs=1e-6)


@criterion(6, "dip null calibration and bimodal power")
def test_c06_dip_calibration_and_power():
    started = time.perf_counter()
    cache = DipNullCache()
    M, n = 2000, 200

    rng = np.random.default_rng(606)
    samples = rng.random((2000, n))
    rejections = 0
    for row in samples:
        p = dip_pvalue(dip_statistic(row), n, M=M, seed=0, cache=cache)
        rejections += p < 0.05
    rate = rejections / samples.shape[0]
    assert 0.03 <= rate <= 0.07, f"null rejection rate {rate}"

    spread = 0.05
    separation = 20 * spread
    power_hits = 0
    for _ in range(500):
        sample = np.concatenate(
            [rng.normal(0.0, spread, n // 2), rng.normal(separation, spread, n // 2)]
        )
        p = dip_pvalue(dip_statistic(sample), n, M=M, seed=0, cache=cache)
        power_hits += p < 0.05
    assert power_hits / 500 >= 0.95, f"power {power_hits / 500}"
    assert time.perf_counter() - started < 300.0


@criterion(7, "unimodal exposure improves; bimodal exposure does not")
def test_c07_unimodality_effect():
    if BACKEND != "compiled":
        pytest.skip("per-record Monte-Carlo flags need the compiled dip kernel")
    started = time.perf_counter()
    dataset, _ = unimodality_contrast_dataset(seed=11, n_agents=150)
    snapshots = shown_crowd_map(dataset, min_prior=3)
    flags = {
        record_id: flag_unimodality(crowd[0], n_min=4, M=2000, seed=11)
        for record_id, crowd in snapshots.items()
        if crowd is not None
    }
    entries = user_subset_improvements(dataset, flags, snapshots=snapshots)
    uni = proportion_test(entries, UnimodalityFlag.UNIMODAL)
    non = proportion_test(entries, UnimodalityFlag.NON_UNIMODAL)
    assert uni.p_value < 0.05 and uni.p_hat > 0.5
    assert non.p_value > 0.05
    uni_curve = sorted_improvement_curve(entries, UnimodalityFlag.UNIMODAL)
    non_curve = sorted_improvement_curve(entries, UnimodalityFlag.NON_UNIMODAL)
    assert float(np.mean(uni_curve)) > float(np.mean(non_curve))
    assert time.perf_counter() - started < 60.0


@criterion(8, "proportions-test checkpoints")
def test_c08_proportion_checkpoints():
    from crowdlab.unimodality import UserSubsetImprovement

    def entries(improved, worsened):
        rows = [1.0] * improved + [-1.0] * worsened
        return [
            UserSubsetImprovement("r", f"u{i}", UnimodalityFlag.UNIMODAL, v, 1)
            for i, v in enumerate(rows)
        ]

    even = proportion_test(entries(50, 50), UnimodalityFlag.UNIMODAL)
    assert even.z == 0.0 and even.p_value == 1.0

    tilted = proportion_test(entries(60, 40), UnimodalityFlag.UNIMODAL)
    assert abs(tilted.z - 2.0) <= 1e-12
    independent = 2.0 * (1.0 - float(ndtr(2.0)))
    assert abs(tilted.p_value - independent) <= 1e-3


_SCENARIO = {
    "n_rounds": 2,
    "truth_per_round": [100.0, 130.0],
    "n_agents": 30,
    "pre_bias": 2.0,
    "pre_sigma": 0.05,
    "crowd_mode": "accurate",
    "min_prior": 3,
    "seed": 5,
    "sw": {"kind": "uniform", "low": -0.8, "high": 0.8},
}

_FAST = ["--bootstrap-count", "50", "--dip-mc", "300", "--alpha-grid=-1:1:9"]


@criterion(9, "seeded pipeline runs are byte-identical")
def test_c09_determinism(tmp_path):
    scenario = tmp_path / "scenario.json"
    scenario.write_text(json.dumps(_SCENARIO))
    trees = []
    for name in ("one", "two"):
        out = tmp_path / name
        rc = main(
            ["all", "--scenario", str(scenario), "--out", str(out), "--seed", "3", *_FAST]
        )
        assert rc == 0
        trees.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert trees[0] == trees[1]


@criterion(10, "serialize -> parse -> re-analyze reproduces the report")
def test_c10_roundtrip_reanalysis(tmp_path):
    scenario = tmp_path / "scenario.json"
    scenario.write_text(json.dumps(_SCENARIO))
    common = dict(
        min_prior=3,
        alpha_grid="-1:1:9",
        bootstrap_count=50,
        dip_mc=300,
        seed=3,
    )
    report_a, files_a = execute(
        RunConfig(command="all", out_dir=str(tmp_path / "a"), scenario=str(scenario), **common)
    )

    dataset, _ = generate_dataset(load_scenario(scenario, seed_override=3))
    records_path = tmp_path / "records.csv"
    truths_path = tmp_path / "truths.csv"
    write_dataset(dataset, records_path, truths_path)
    reparsed = parse_dataset(records_path, truths_path)
    assert reparsed.rounds == dataset.rounds  # serialization is lossless

    report_b, files_b = execute(
        RunConfig(
            command="all",
            out_dir=str(tmp_path / "b"),
            records=str(records_path),
            truths=str(truths_path),
            **common,
        )
    )
    report_a.pop("meta")
    report_b.pop("meta")
    assert report_a == report_b
    assert set(files_a) == set(files_b)
    for name in files_a:
        if name != "report.json":  # report embeds provenance metadata
            assert files_a[name] == files_b[name], name
