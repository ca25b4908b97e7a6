"""Social weight: how far a revised prediction moved toward the crowd.

The revision model is log-linear,

    log(post) = (1 - sw) * log(pre) + sw * log(crowd_geomean)

so the weight is recovered as

    sw = (log(post) - log(pre)) / (log(crowd_geomean) - log(pre))

sw = 0 means no movement, 1 full adoption of the crowd mean, negative values
movement away from the crowd.  The weight is left unclamped; values outside
[-1, 1] are kept and simply never selected by a threshold filter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .dataset import Dataset, shown_crowd_map
from .errors import NonPositiveInputError

SW_EPS = 1e-12  # log-space tolerance for "no movement" / "no reference"

INSUFFICIENT_PRIOR = "insufficient_prior"
UNDEFINED_SW = "undefined_sw"


class Direction(str, Enum):
    TOWARD_CROWD = "toward_crowd"
    AWAY_FROM_CROWD = "away_from_crowd"
    NO_CHANGE = "no_change"
    UNDEFINED = "undefined"


class ErrorMode(str, Enum):
    """Per-prediction error metric: price units or fraction of the truth."""

    ABSOLUTE = "absolute"
    PERCENT = "percent"


def prediction_error(value: float, truth: float, mode: ErrorMode = ErrorMode.ABSOLUTE) -> float:
    err = abs(value - truth)
    return err / truth if mode is ErrorMode.PERCENT else err


@dataclass(frozen=True)
class SocialWeightResult:
    """Weight, direction class and individual improvement for one record."""

    record_id: str
    round_id: str
    user_id: str
    sw: float | None
    direction: Direction
    individual_improvement: float
    excluded_reason: str | None = None  # insufficient_prior | undefined_sw


def compute_sw(pre: float, post: float, geomean: float, eps: float = SW_EPS) -> float | None:
    """Social weight of one revision, or None when it is undefined.

    A denominator below eps (pre already at the crowd mean) yields 0 when the
    numerator is also below eps (no movement, no signal) and None otherwise
    (movement with no reference direction).
    """
    if pre <= 0 or post <= 0 or geomean <= 0:
        raise NonPositiveInputError(f"prices must be > 0, got {(pre, post, geomean)}")
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    num = math.log(post) - math.log(pre)
    den = math.log(geomean) - math.log(pre)
    if abs(den) < eps:
        return 0.0 if abs(num) < eps else None
    return num / den


def _direction(sw: float | None) -> Direction:
    if sw is None:
        return Direction.UNDEFINED
    if sw > 0:
        return Direction.TOWARD_CROWD
    if sw < 0:
        return Direction.AWAY_FROM_CROWD
    return Direction.NO_CHANGE


def classify_records(
    dataset: Dataset,
    min_prior: int = 3,
    error_mode: ErrorMode = ErrorMode.ABSOLUTE,
    snapshots: dict | None = None,
) -> list[SocialWeightResult]:
    """Social weight and improvement for every record of the dataset.

    Records without a valid shown crowd, or with an undefined weight, carry
    an ``excluded_reason`` and are skipped by downstream threshold filters.
    ``snapshots`` may pass a precomputed ``shown_crowd_map`` to avoid
    rebuilding it.
    """
    if snapshots is None:
        snapshots = shown_crowd_map(dataset, min_prior)
    results = []
    for rnd, _, rec in dataset.records():
        improvement = prediction_error(rec.pre_social, rnd.truth, error_mode) - prediction_error(
            rec.post_social, rnd.truth, error_mode
        )
        crowd = snapshots.get(rec.record_id)
        if crowd is None:
            results.append(
                SocialWeightResult(
                    record_id=rec.record_id,
                    round_id=rec.round_id,
                    user_id=rec.user_id,
                    sw=None,
                    direction=Direction.UNDEFINED,
                    individual_improvement=improvement,
                    excluded_reason=INSUFFICIENT_PRIOR,
                )
            )
            continue
        _, geomean = crowd
        sw = compute_sw(rec.pre_social, rec.post_social, geomean)
        results.append(
            SocialWeightResult(
                record_id=rec.record_id,
                round_id=rec.round_id,
                user_id=rec.user_id,
                sw=sw,
                direction=_direction(sw),
                individual_improvement=improvement,
                excluded_reason=None if sw is not None else UNDEFINED_SW,
            )
        )
    return results


OUTCOMES = ("improved", "worsened", "unchanged")


def _outcome(improvement: float) -> str:
    if improvement > 0:
        return "improved"
    if improvement < 0:
        return "worsened"
    return "unchanged"


def sw_sign_summary(results: list[SocialWeightResult]) -> dict[str, dict[str, int]]:
    """Count records by movement direction x improvement outcome.

    Only records with a defined weight are counted; the table partitions
    them completely.
    """
    table = {
        d.value: {o: 0 for o in OUTCOMES}
        for d in (Direction.TOWARD_CROWD, Direction.AWAY_FROM_CROWD, Direction.NO_CHANGE)
    }
    for res in results:
        if res.sw is None or res.excluded_reason is not None:
            continue
        table[res.direction.value][_outcome(res.individual_improvement)] += 1
    return table
