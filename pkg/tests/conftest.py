from __future__ import annotations

import pytest

from crowdlab.dataset import Dataset, PredictionRecord, Round


def make_record(
    record_id: str,
    round_id: str = "r1",
    user_id: str = "u1",
    timestamp: int = 0,
    pre: float = 100.0,
    post: float = 100.0,
    **kwargs,
) -> PredictionRecord:
    return PredictionRecord(
        record_id=record_id,
        round_id=round_id,
        user_id=user_id,
        timestamp=timestamp,
        pre_social=pre,
        post_social=post,
        **kwargs,
    )


def make_dataset(truths: dict[str, float], records: list[PredictionRecord]) -> Dataset:
    rounds = []
    for round_id in sorted(truths):
        members = sorted(
            (r for r in records if r.round_id == round_id), key=lambda r: r.order_key
        )
        rounds.append(Round(round_id=round_id, truth=truths[round_id], records=tuple(members)))
    return Dataset(rounds=tuple(rounds))


@pytest.fixture
def tiny_dataset() -> Dataset:
    # one round, three users in timestamp order
    records = [
        make_record("a", timestamp=0, user_id="u1", pre=80.0, post=95.0),
        make_record("b", timestamp=1, user_id="u2", pre=120.0, post=110.0),
        make_record("c", timestamp=2, user_id="u3", pre=90.0, post=101.0),
    ]
    return make_dataset({"r1": 100.0}, records)
