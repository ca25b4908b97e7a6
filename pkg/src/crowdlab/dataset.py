"""Data model for crowd prediction experiments.

A dataset is a set of rounds, each with a realized true price and a
chronologically ordered list of prediction records.  Every record is a
(pre-social, post-social) pair: the prediction before seeing the crowd and
the one after.  When the data does not carry the crowd snapshot that was
displayed, it is reconstructed as all pre-social predictions submitted
strictly earlier in the round by other users (the displayed histogram is
assumed to contain pre-social predictions; earlier submissions by the same
user are excluded).

CSV schemas
-----------
records: ``record_id,round_id,user_id,timestamp,pre_social,post_social,confidence,shown_sample``
    timestamp is ISO-8601 or an integer epoch, auto-detected per file;
    confidence may be empty; shown_sample is a ``;``-separated price list or
    empty.
truths:  ``round_id,truth``

Prices serialize as their shortest exact decimal form so that parsing a
serialized dataset reproduces it bit for bit.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import IO, Iterable, Union

import numpy as np

from .errors import MalformedRowError, NonPositivePriceError, UnknownRoundError

RECORDS_HEADER = [
    "record_id",
    "round_id",
    "user_id",
    "timestamp",
    "pre_social",
    "post_social",
    "confidence",
    "shown_sample",
]
TRUTHS_HEADER = ["round_id", "truth"]

GEOMEAN_RTOL = 1e-9  # stored snapshot mean must match the sample this closely

Timestamp = Union[int, datetime]
Source = Union[str, Path, IO[str], IO[bytes]]


def geometric_mean(prices) -> float:
    """exp(mean(log(prices))) — the crowd reference point."""
    arr = np.asarray(prices, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("geometric mean of an empty sequence")
    if np.any(arr <= 0):
        raise NonPositivePriceError(None, "price", float(arr.min()))
    return float(np.exp(np.mean(np.log(arr))))


@dataclass(frozen=True)
class PredictionRecord:
    """One pre/post prediction pair plus the crowd snapshot shown, if any."""

    record_id: str
    round_id: str
    user_id: str
    timestamp: Timestamp
    pre_social: float
    post_social: float
    confidence: float | None = None  # stored, never analyzed
    shown_sample: tuple[float, ...] | None = None
    shown_geomean: float | None = None

    def __post_init__(self):
        if self.pre_social <= 0:
            raise NonPositivePriceError(None, "pre_social", self.pre_social)
        if self.post_social <= 0:
            raise NonPositivePriceError(None, "post_social", self.post_social)
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")
        if self.shown_sample is not None:
            if len(self.shown_sample) == 0:
                raise ValueError("shown_sample must be non-empty when present")
            gm = geometric_mean(self.shown_sample)
            if self.shown_geomean is None:
                object.__setattr__(self, "shown_geomean", gm)
            elif abs(self.shown_geomean - gm) > GEOMEAN_RTOL * gm:
                raise ValueError(
                    f"shown_geomean {self.shown_geomean} inconsistent with sample mean {gm}"
                )
        elif self.shown_geomean is not None:
            raise ValueError("shown_geomean without shown_sample")

    @property
    def order_key(self) -> tuple:
        # timestamp ties broken by record_id for a deterministic order
        return (self.timestamp, self.record_id)


@dataclass(frozen=True)
class Round:
    """One prediction round: the realized truth and its ordered records."""

    round_id: str
    truth: float
    records: tuple[PredictionRecord, ...]

    def __post_init__(self):
        if self.truth <= 0:
            raise NonPositivePriceError(None, "truth", self.truth)
        keys = [r.order_key for r in self.records]
        if any(b <= a for a, b in zip(keys, keys[1:])):
            raise ValueError(f"round {self.round_id!r}: records not sorted by (timestamp, record_id)")
        for r in self.records:
            if r.round_id != self.round_id:
                raise ValueError(f"record {r.record_id!r} belongs to round {r.round_id!r}")


@dataclass(frozen=True)
class Dataset:
    rounds: tuple[Round, ...]
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        round_ids = [r.round_id for r in self.rounds]
        if len(set(round_ids)) != len(round_ids):
            raise ValueError("duplicate round_id")
        seen: set[str] = set()
        for rnd in self.rounds:
            for rec in rnd.records:
                if rec.record_id in seen:
                    raise ValueError(f"duplicate record_id {rec.record_id!r}")
                seen.add(rec.record_id)

    @property
    def n_records(self) -> int:
        return sum(len(r.records) for r in self.rounds)

    def records(self) -> Iterable[tuple[Round, int, PredictionRecord]]:
        for rnd in self.rounds:
            for idx, rec in enumerate(rnd.records):
                yield rnd, idx, rec


def reconstruct_shown_crowd(
    rnd: Round, index: int, min_prior: int = 3
) -> tuple[tuple[float, ...], float] | None:
    """Crowd snapshot for the record at ``index`` in round order.

    Returns (sample, geometric mean) built from pre-social predictions of
    other users submitted strictly earlier, or None when fewer than
    ``min_prior`` such predictions exist (the record is then excluded from
    social-weight and unimodality analyses and only counted in reports).
    """
    if min_prior < 1:
        raise ValueError(f"min_prior must be >= 1, got {min_prior}")
    if not 0 <= index < len(rnd.records):
        raise IndexError(f"record index {index} out of range for round {rnd.round_id!r}")
    me = rnd.records[index]
    prior = [
        r.pre_social
        for r in rnd.records[:index]
        if r.user_id != me.user_id and r.order_key < me.order_key
    ]
    if len(prior) < min_prior:
        return None
    return tuple(prior), geometric_mean(prior)


def shown_crowd_map(
    dataset: Dataset, min_prior: int = 3
) -> dict[str, tuple[tuple[float, ...], float] | None]:
    """Crowd snapshot per record_id; a stored snapshot wins over reconstruction."""
    out: dict[str, tuple[tuple[float, ...], float] | None] = {}
    for rnd, idx, rec in dataset.records():
        if rec.shown_sample is not None:
            out[rec.record_id] = (rec.shown_sample, rec.shown_geomean)
        else:
            out[rec.record_id] = reconstruct_shown_crowd(rnd, idx, min_prior)
    return out


# --- CSV I/O ---------------------------------------------------------------


def _read_text(source: Source) -> str:
    """Accepts a path, a text stream, or a byte stream (UTF-8)."""
    if isinstance(source, (str, Path)):
        return Path(source).read_text(encoding="utf-8")
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def _fmt(x: float) -> str:
    return repr(float(x))


def _parse_price(raw: str, line: int, field_name: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise MalformedRowError(line, f"{field_name} is not a number: {raw!r}") from None
    if not math.isfinite(value):
        raise MalformedRowError(line, f"{field_name} is not finite: {raw!r}")
    if value <= 0:
        raise NonPositivePriceError(line, field_name, value)
    return value


def _looks_like_int(raw: str) -> bool:
    raw = raw.strip()
    if raw.startswith(("+", "-")):
        raw = raw[1:]
    return raw.isdigit()


def _parse_timestamp(raw: str, as_int: bool, line: int) -> Timestamp:
    if as_int:
        return int(raw)
    try:
        return datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError:
        raise MalformedRowError(line, f"timestamp is neither epoch nor ISO-8601: {raw!r}") from None


def parse_dataset(records_source: Source, truths_source: Source, meta: dict[str, str] | None = None) -> Dataset:
    """Assemble a Dataset from the records and truths CSV sources.

    Rows violating the schema raise with the offending line number; records
    referencing a round absent from the truths table raise UnknownRoundError.
    """
    truths: dict[str, float] = {}
    reader = csv.reader(io.StringIO(_read_text(truths_source)))
    header = next(reader, None)
    if header != TRUTHS_HEADER:
        raise MalformedRowError(1, f"truths header must be {','.join(TRUTHS_HEADER)}")
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 2:
            raise MalformedRowError(line, f"expected 2 fields, got {len(row)}")
        round_id, raw_truth = row
        if round_id in truths:
            raise MalformedRowError(line, f"duplicate round_id {round_id!r}")
        truths[round_id] = _parse_price(raw_truth, line, "truth")

    raw_rows: list[tuple[int, dict[str, str]]] = []
    reader = csv.reader(io.StringIO(_read_text(records_source)))
    header = next(reader, None)
    if header != RECORDS_HEADER:
        raise MalformedRowError(1, f"records header must be {','.join(RECORDS_HEADER)}")
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(RECORDS_HEADER):
            raise MalformedRowError(line, f"expected {len(RECORDS_HEADER)} fields, got {len(row)}")
        raw_rows.append((line, dict(zip(RECORDS_HEADER, row))))

    # timestamps are uniform within a file: integer epochs only if every one is
    epoch = all(_looks_like_int(row["timestamp"]) for _, row in raw_rows) if raw_rows else True

    by_round: dict[str, list[PredictionRecord]] = {}
    seen_ids: set[str] = set()
    for line, row in raw_rows:
        record_id = row["record_id"]
        if not record_id:
            raise MalformedRowError(line, "empty record_id")
        if record_id in seen_ids:
            raise MalformedRowError(line, f"duplicate record_id {record_id!r}")
        seen_ids.add(record_id)
        round_id = row["round_id"]
        if round_id not in truths:
            raise UnknownRoundError(round_id)

        confidence = None
        if row["confidence"]:
            try:
                confidence = float(row["confidence"])
            except ValueError:
                raise MalformedRowError(line, f"confidence is not a number: {row['confidence']!r}") from None
            if not 0.0 <= confidence <= 1.0:
                raise MalformedRowError(line, f"confidence outside [0, 1]: {confidence}")

        shown = None
        if row["shown_sample"]:
            shown = tuple(
                _parse_price(piece, line, "shown_sample") for piece in row["shown_sample"].split(";")
            )

        record = PredictionRecord(
            record_id=record_id,
            round_id=round_id,
            user_id=row["user_id"],
            timestamp=_parse_timestamp(row["timestamp"], epoch, line),
            pre_social=_parse_price(row["pre_social"], line, "pre_social"),
            post_social=_parse_price(row["post_social"], line, "post_social"),
            confidence=confidence,
            shown_sample=shown,
        )
        by_round.setdefault(round_id, []).append(record)

    rounds = tuple(
        Round(
            round_id=round_id,
            truth=truths[round_id],
            records=tuple(sorted(by_round.get(round_id, []), key=lambda r: r.order_key)),
        )
        for round_id in sorted(truths)
    )
    return Dataset(rounds=rounds, meta=dict(meta or {}))


def _fmt_timestamp(ts: Timestamp) -> str:
    return ts.isoformat() if isinstance(ts, datetime) else str(ts)


def serialize_records(dataset: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RECORDS_HEADER)
    for rnd in dataset.rounds:
        for rec in rnd.records:
            writer.writerow(
                [
                    rec.record_id,
                    rec.round_id,
                    rec.user_id,
                    _fmt_timestamp(rec.timestamp),
                    _fmt(rec.pre_social),
                    _fmt(rec.post_social),
                    "" if rec.confidence is None else _fmt(rec.confidence),
                    "" if rec.shown_sample is None else ";".join(_fmt(p) for p in rec.shown_sample),
                ]
            )
    return buf.getvalue()


def serialize_truths(dataset: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRUTHS_HEADER)
    for rnd in dataset.rounds:
        writer.writerow([rnd.round_id, _fmt(rnd.truth)])
    return buf.getvalue()


def write_dataset(dataset: Dataset, records_path: str | Path, truths_path: str | Path) -> None:
    Path(records_path).write_text(serialize_records(dataset), encoding="utf-8")
    Path(truths_path).write_text(serialize_truths(dataset), encoding="utf-8")
