"""Exception types raised by the library.

Exclusions that are part of normal analysis flow (a record without enough
prior predictions, an empty filtered round, an undefined social weight) are
represented as values, not exceptions; only contract violations raise.
"""

from __future__ import annotations


class CrowdLabError(Exception):
    """Base class for all library errors."""


class MalformedRowError(CrowdLabError):
    """A CSV row violates the schema or a field fails validation."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class UnknownRoundError(CrowdLabError):
    """A record references a round_id absent from the truths table."""

    def __init__(self, round_id: str):
        self.round_id = round_id
        super().__init__(f"round {round_id!r} has records but no truth value")


class NonPositivePriceError(CrowdLabError):
    """A price field is zero or negative (log-space model needs > 0)."""

    def __init__(self, line: int | None, field: str, value: float):
        self.line = line
        self.field = field
        self.value = value
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{field} must be > 0, got {value}")


class NonPositiveInputError(CrowdLabError):
    """A price argument to a computation is zero or negative."""


class AlphaRangeError(CrowdLabError):
    """A social-weight threshold lies outside [-1, 1]."""


class EmptySubsetError(CrowdLabError):
    """The filtered subset contributes no records in any round."""


class NoRoundsError(CrowdLabError):
    """A cross-round mean was requested over zero rounds."""


class EmptySampleError(CrowdLabError):
    """The dip statistic was requested for an empty sample."""


class TooFewPointsError(CrowdLabError):
    """A dip p-value was requested below the minimum sample size."""

    def __init__(self, n: int, n_min: int):
        self.n = n
        self.n_min = n_min
        super().__init__(f"sample size {n} is below the minimum {n_min}")


class MissingFlagError(CrowdLabError):
    """A record that should carry a unimodality flag has none."""

    def __init__(self, record_id: str):
        self.record_id = record_id
        super().__init__(f"record {record_id!r} has a shown crowd but no dip flag")


class NoDecisiveEntriesError(CrowdLabError):
    """A proportions test was requested with zero improved+worsened entries."""


class ScenarioError(CrowdLabError):
    """A simulation scenario specification is invalid."""
