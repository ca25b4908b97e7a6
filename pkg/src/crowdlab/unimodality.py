"""Partition predictions by the unimodality of the crowd each user saw.

Within every round, each user's records split into two classes by the dip
flag of the shown crowd (indeterminate records belong to neither).  Per
(round, user, class) the mean individual improvement is computed; the
improved-vs-worsened split per class is then tested against one half with a
one-sample z test without continuity correction (ties sit out of the test
and are reported alongside).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dataset import Dataset, shown_crowd_map
from .dip import DipResult, UnimodalityFlag
from .errors import MissingFlagError, NoDecisiveEntriesError
from .social_weight import ErrorMode, prediction_error

DIP_FLAG_CLASSES = (UnimodalityFlag.UNIMODAL, UnimodalityFlag.NON_UNIMODAL)


@dataclass(frozen=True)
class UserSubsetImprovement:
    """Mean improvement of one user's records in one round and one class."""

    round_id: str
    user_id: str
    k: UnimodalityFlag
    mean_improvement: float
    n: int


@dataclass(frozen=True)
class ProportionTestResult:
    k: UnimodalityFlag
    n_improved: int
    n_worsened: int
    n_unchanged: int
    p_hat: float  # improved / (improved + worsened); ties excluded
    z: float
    p_value: float  # two-sided


def normal_cdf(z: float) -> float:
    """Standard normal CDF via erfc (accurate far into the tails)."""
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def user_subset_improvements(
    dataset: Dataset,
    dip_flags: dict[str, DipResult],
    error_mode: ErrorMode = ErrorMode.ABSOLUTE,
    snapshots: dict | None = None,
    min_prior: int = 3,
) -> list[UserSubsetImprovement]:
    """Per-(round, user, class) mean improvements, deterministically ordered.

    Every record with a shown crowd must appear in ``dip_flags``; a missing
    entry raises MissingFlagError.  Records without a shown crowd, or flagged
    indeterminate, contribute to no class.
    """
    if snapshots is None:
        snapshots = shown_crowd_map(dataset, min_prior)
    groups: dict[tuple[str, str, UnimodalityFlag], list[float]] = {}
    for rnd, _, rec in dataset.records():
        if snapshots.get(rec.record_id) is None:
            continue
        flag_result = dip_flags.get(rec.record_id)
        if flag_result is None:
            raise MissingFlagError(rec.record_id)
        if flag_result.flag is UnimodalityFlag.INDETERMINATE:
            continue
        improvement = prediction_error(rec.pre_social, rnd.truth, error_mode) - prediction_error(
            rec.post_social, rnd.truth, error_mode
        )
        groups.setdefault((rec.round_id, rec.user_id, flag_result.flag), []).append(improvement)
    return [
        UserSubsetImprovement(
            round_id=round_id,
            user_id=user_id,
            k=k,
            mean_improvement=sum(vals) / len(vals),
            n=len(vals),
        )
        for (round_id, user_id, k), vals in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2].value))
    ]


def proportion_test(entries: list[UserSubsetImprovement], k: UnimodalityFlag) -> ProportionTestResult:
    """Two-sided z test of P(improved) = 1/2 among decisive entries of class k.

    z = (improved - worsened) / sqrt(improved + worsened), the one-sample
    proportions statistic without continuity correction.
    """
    improved = worsened = unchanged = 0
    for entry in entries:
        if entry.k is not k:
            continue
        if entry.mean_improvement > 0:
            improved += 1
        elif entry.mean_improvement < 0:
            worsened += 1
        else:
            unchanged += 1
    m = improved + worsened
    if m == 0:
        raise NoDecisiveEntriesError(f"class {k.value}: every entry is a tie or absent")
    z = (improved - worsened) / math.sqrt(m)
    p_value = math.erfc(abs(z) / math.sqrt(2.0))  # = 2 * (1 - Phi(|z|))
    return ProportionTestResult(
        k=k,
        n_improved=improved,
        n_worsened=worsened,
        n_unchanged=unchanged,
        p_hat=improved / m,
        z=z,
        p_value=p_value,
    )


def sorted_improvement_curve(
    entries: list[UserSubsetImprovement], k: UnimodalityFlag
) -> list[float]:
    """All class-k improvements, sorted descending (plot data)."""
    return sorted(
        (e.mean_improvement for e in entries if e.k is k),
        reverse=True,
    )
