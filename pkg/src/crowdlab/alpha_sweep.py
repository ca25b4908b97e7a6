"""Threshold filtering of records by social weight and the improvement sweep.

For a threshold alpha, the subset keeps records whose weight lies between 0
and alpha (same sign as alpha; alpha = 0 keeps exactly the zero-weight
records and is flagged degenerate).  Per round, the improvement is the error
of the arithmetic pre-social mean minus the error of the post-social mean;
the cross-round mean weights every contributing round equally.  Its sampling
distribution comes from resampling subset records with replacement, either
pooled across rounds (default) or stratified within each round; replicate b
draws its random stream from (seed, b), so results do not depend on
execution order.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dataset import Dataset
from .errors import AlphaRangeError, EmptySubsetError, NoRoundsError
from .social_weight import ErrorMode, SocialWeightResult, prediction_error

DEFAULT_BOOTSTRAP_COUNT = 100  # replicates per threshold
CI_PERCENTILES = (2.5, 97.5)  # 95% percentile interval

FLAG_OK = "ok"
FLAG_DEGENERATE = "degenerate"  # the alpha = 0 boundary point
FLAG_EMPTY = "empty_subset"


class ResampleMode(str, Enum):
    POOLED = "pooled"
    STRATIFIED = "stratified"


@dataclass(frozen=True)
class FilteredSubset:
    alpha: float
    record_ids: frozenset[str]


@dataclass(frozen=True)
class RoundImprovement:
    round_id: str
    mean_pre: float
    mean_post: float
    err_pre: float
    err_post: float
    improvement: float  # err_pre - err_post
    n: int


@dataclass(frozen=True)
class AlphaSweepPoint:
    alpha: float
    mean_improvement: float | None  # plug-in estimate on the full subset
    bootstrap_samples: tuple[float, ...]
    ci_low: float | None
    ci_high: float | None
    n_records: int
    flag: str = FLAG_OK


def _check_alpha(alpha: float) -> None:
    if not -1.0 <= alpha <= 1.0:
        raise AlphaRangeError(f"alpha must be within [-1, 1], got {alpha}")


def filter_by_alpha(results: list[SocialWeightResult], alpha: float) -> FilteredSubset:
    """Records whose weight lies between 0 and alpha (inclusive both ends)."""
    _check_alpha(alpha)
    kept = []
    for res in results:
        if res.sw is None or res.excluded_reason is not None:
            continue
        if alpha > 0:
            ok = 0.0 <= res.sw <= alpha
        elif alpha < 0:
            ok = alpha <= res.sw <= 0.0
        else:
            ok = res.sw == 0.0
        if ok:
            kept.append(res.record_id)
    return FilteredSubset(alpha=alpha, record_ids=frozenset(kept))


def round_improvement(
    rnd, subset: FilteredSubset, error_mode: ErrorMode = ErrorMode.ABSOLUTE
) -> RoundImprovement | None:
    """Aggregate improvement of one round's subset records, or None if empty."""
    pre = [r.pre_social for r in rnd.records if r.record_id in subset.record_ids]
    post = [r.post_social for r in rnd.records if r.record_id in subset.record_ids]
    if not pre:
        return None
    mean_pre = float(np.mean(pre))
    mean_post = float(np.mean(post))
    err_pre = prediction_error(mean_pre, rnd.truth, error_mode)
    err_post = prediction_error(mean_post, rnd.truth, error_mode)
    return RoundImprovement(
        round_id=rnd.round_id,
        mean_pre=mean_pre,
        mean_post=mean_post,
        err_pre=err_pre,
        err_post=err_post,
        improvement=err_pre - err_post,
        n=len(pre),
    )


def mean_improvement(per_round: list[RoundImprovement]) -> float:
    """Unweighted mean across rounds; every round counts once regardless of n."""
    if not per_round:
        raise NoRoundsError("no rounds contribute to the mean improvement")
    return float(np.mean([ri.improvement for ri in per_round]))


def _subset_arrays(dataset: Dataset, subset: FilteredSubset):
    """Pooled (pre, post, truth-by-round, round index) arrays of the subset."""
    pre, post, round_idx, truths, round_of = [], [], [], [], []
    for rnd in dataset.rounds:
        members = [r for r in rnd.records if r.record_id in subset.record_ids]
        if not members:
            continue
        r_i = len(truths)
        truths.append(rnd.truth)
        round_of.append(rnd.round_id)
        for rec in members:
            pre.append(rec.pre_social)
            post.append(rec.post_social)
            round_idx.append(r_i)
    return (
        np.asarray(pre),
        np.asarray(post),
        np.asarray(round_idx, dtype=np.intp),
        np.asarray(truths),
    )


def _replicate_indices(
    rng: np.random.Generator, round_idx: np.ndarray, mode: ResampleMode
) -> np.ndarray:
    """Resampled positions into the pooled arrays, same cardinality."""
    n = round_idx.size
    if mode is ResampleMode.POOLED:
        return rng.integers(0, n, size=n)
    parts = []
    for r_i in range(int(round_idx.max()) + 1):
        positions = np.flatnonzero(round_idx == r_i)
        parts.append(positions[rng.integers(0, positions.size, size=positions.size)])
    return np.concatenate(parts)


def _improvement_of_indices(
    idx: np.ndarray,
    pre: np.ndarray,
    post: np.ndarray,
    round_idx: np.ndarray,
    truths: np.ndarray,
    error_mode: ErrorMode,
) -> float:
    n_rounds = truths.size
    counts = np.bincount(round_idx[idx], minlength=n_rounds)
    sum_pre = np.bincount(round_idx[idx], weights=pre[idx], minlength=n_rounds)
    sum_post = np.bincount(round_idx[idx], weights=post[idx], minlength=n_rounds)
    present = counts > 0
    t = truths[present]
    err_pre = np.abs(sum_pre[present] / counts[present] - t)
    err_post = np.abs(sum_post[present] / counts[present] - t)
    if error_mode is ErrorMode.PERCENT:
        err_pre = err_pre / t
        err_post = err_post / t
    return float(np.mean(err_pre - err_post))


def bootstrap_improvement(
    dataset: Dataset,
    results: list[SocialWeightResult],
    alpha: float,
    B: int = DEFAULT_BOOTSTRAP_COUNT,
    seed: int = 0,
    error_mode: ErrorMode = ErrorMode.ABSOLUTE,
    resample_mode: ResampleMode = ResampleMode.POOLED,
) -> AlphaSweepPoint:
    """Plug-in improvement at one threshold plus its bootstrap distribution.

    Raises EmptySubsetError when no round contributes a record.
    """
    if B < 1:
        raise ValueError(f"B must be >= 1, got {B}")
    subset = filter_by_alpha(results, alpha)
    per_round = [
        ri
        for rnd in dataset.rounds
        if (ri := round_improvement(rnd, subset, error_mode)) is not None
    ]
    if not per_round:
        raise EmptySubsetError(f"no records selected at alpha={alpha}")
    plug_in = mean_improvement(per_round)

    pre, post, round_idx, truths = _subset_arrays(dataset, subset)
    samples = np.empty(B)
    for b in range(B):
        rng = np.random.default_rng([seed, b])
        idx = _replicate_indices(rng, round_idx, resample_mode)
        samples[b] = _improvement_of_indices(idx, pre, post, round_idx, truths, error_mode)
    ci_low, ci_high = np.percentile(samples, CI_PERCENTILES)
    return AlphaSweepPoint(
        alpha=alpha,
        mean_improvement=plug_in,
        bootstrap_samples=tuple(float(s) for s in samples),
        ci_low=float(ci_low),
        ci_high=float(ci_high),
        n_records=len(subset.record_ids),
        flag=FLAG_DEGENERATE if alpha == 0 else FLAG_OK,
    )


def default_alpha_grid(n_points: int = 41) -> list[float]:
    """Evenly spaced thresholds spanning [-1, 1]."""
    return [float(a) for a in np.linspace(-1.0, 1.0, n_points)]


def sweep_alpha(
    dataset: Dataset,
    results: list[SocialWeightResult],
    grid: list[float] | None = None,
    B: int = DEFAULT_BOOTSTRAP_COUNT,
    seed: int = 0,
    error_mode: ErrorMode = ErrorMode.ABSOLUTE,
    resample_mode: ResampleMode = ResampleMode.POOLED,
) -> list[AlphaSweepPoint]:
    """One sweep point per grid threshold, ordered by alpha.

    Empty subsets yield flagged points instead of being dropped.
    """
    if grid is None:
        grid = default_alpha_grid()
    points = []
    for alpha in grid:
        _check_alpha(alpha)
        try:
            points.append(
                bootstrap_improvement(
                    dataset, results, alpha, B=B, seed=seed,
                    error_mode=error_mode, resample_mode=resample_mode,
                )
            )
        except EmptySubsetError:
            points.append(
                AlphaSweepPoint(
                    alpha=alpha,
                    mean_improvement=None,
                    bootstrap_samples=(),
                    ci_low=None,
                    ci_high=None,
                    n_records=0,
                    flag=FLAG_EMPTY,
                )
            )
    return sorted(points, key=lambda p: p.alpha)
