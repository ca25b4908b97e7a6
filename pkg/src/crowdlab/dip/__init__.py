"""Hartigan & Hartigan (1985) dip test of unimodality.

``dip_statistic`` measures the sup-norm distance from a sample's empirical
CDF to the nearest unimodal CDF, floored at 1/(2n); the floor only binds for
degenerate samples (a single point, or all values equal).  The statistic is
invariant under positive affine maps of the values and lies in
[1/(2n), 0.25] for every sample of size >= 2.

P-values are Monte Carlo: the observed dip is ranked against dips of uniform
samples of the same size (the classical least-favorable unimodal null), with
the add-one estimator so p is never 0.  Null distributions are cached per
(n, M, seed) and can persist to a versioned JSON file.

Two interchangeable kernels exist: a compiled Cython one and a pure-Python
fallback with identical operation order (bit-identical results).  The
compiled kernel is picked automatically when built; set the environment
variable ``CROWDLAB_DIP_BACKEND`` to ``python`` or ``compiled`` to force one.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from ..errors import EmptySampleError, TooFewPointsError

_FORCED = os.environ.get("CROWDLAB_DIP_BACKEND", "").strip().lower()
if _FORCED == "python":
    from . import _pure as _kernel
elif _FORCED == "compiled":
    from . import _core as _kernel  # type: ignore[no-redef]
elif _FORCED:
    raise ImportError(f"CROWDLAB_DIP_BACKEND must be 'python' or 'compiled', got {_FORCED!r}")
else:
    try:
        from . import _core as _kernel  # type: ignore[no-redef]
    except ImportError:
        from . import _pure as _kernel

BACKEND: str = _kernel.BACKEND_NAME

NON_UNIMODAL_ALPHA = 0.05  # flag threshold on the Monte-Carlo p-value
DEFAULT_N_MIN = 4
DEFAULT_MC_COUNT = 10_000


class UnimodalityFlag(str, Enum):
    UNIMODAL = "unimodal"
    NON_UNIMODAL = "non_unimodal"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class DipResult:
    """Dip statistic, Monte-Carlo p-value and flag for one sample."""

    n: int
    dip: float | None
    p_value: float | None
    flag: UnimodalityFlag


def dip_statistic(sample) -> float:
    """Dip statistic of a 1-d sample (any order, ties allowed)."""
    xs = np.asarray(sample, dtype=np.float64)
    if xs.ndim != 1:
        raise ValueError(f"sample must be 1-d, got shape {xs.shape}")
    if xs.size == 0:
        raise EmptySampleError("dip statistic of an empty sample")
    if not np.all(np.isfinite(xs)):
        raise ValueError("sample contains non-finite values")
    return float(_kernel.dip_sorted(np.sort(xs)))


class DipNullCache:
    """Simulated null dip distributions, keyed by (n, M, seed).

    Entries hold the full sorted vector of M null dips (the empirical
    quantile function at resolution 1/M).  Safe to share read-only across
    threads once populated.  When constructed with a path, entries load from
    and persist to that JSON file.
    """

    FORMAT = "crowdlab-dip-null"
    VERSION = 1

    def __init__(self, path: str | Path | None = None):
        self._path = Path(path) if path is not None else None
        self._table: dict[tuple[int, int, int], np.ndarray] = {}
        if self._path is not None and self._path.exists():
            self._load()

    def _load(self) -> None:
        payload = json.loads(self._path.read_text())
        if payload.get("format") != self.FORMAT or payload.get("version") != self.VERSION:
            raise ValueError(f"unrecognized null-cache file {self._path}")
        for key, dips in payload["entries"].items():
            n, m, seed = (int(part) for part in key.split(","))
            self._table[(n, m, seed)] = np.asarray(dips, dtype=np.float64)

    def _save(self) -> None:
        entries = {
            f"{n},{m},{seed}": dips.tolist()
            for (n, m, seed), dips in sorted(self._table.items())
        }
        payload = {"format": self.FORMAT, "version": self.VERSION, "entries": entries}
        tmp = self._path.with_suffix(self._path.suffix + ".tmp")
        tmp.write_text(json.dumps(payload))
        os.replace(tmp, self._path)

    def null_dips(self, n: int, M: int, seed: int) -> np.ndarray:
        """Sorted dips of M uniform samples of size n (computed once)."""
        key = (int(n), int(M), int(seed))
        hit = self._table.get(key)
        if hit is None:
            rng = np.random.default_rng([seed, n, M])
            rows = np.sort(rng.random((M, n)), axis=1)
            hit = np.sort(_kernel.dip_rows(rows))
            self._table[key] = hit
            if self._path is not None:
                self._save()
        return hit


_shared_cache = DipNullCache()


def dip_pvalue(
    dip: float,
    n: int,
    M: int = DEFAULT_MC_COUNT,
    seed: int = 0,
    n_min: int = DEFAULT_N_MIN,
    cache: DipNullCache | None = None,
) -> float:
    """Monte-Carlo p-value of an observed dip under the uniform null.

    p = (1 + #{null dips >= dip}) / (M + 1), deterministic given the seed.
    """
    if n < n_min:
        raise TooFewPointsError(n, n_min)
    if M < 100:
        raise ValueError(f"M must be >= 100, got {M}")
    null = (cache or _shared_cache).null_dips(n, M, seed)
    exceed = int(M - np.searchsorted(null, dip, side="left"))
    return (1 + exceed) / (M + 1)


def flag_unimodality(
    sample,
    n_min: int = DEFAULT_N_MIN,
    M: int = DEFAULT_MC_COUNT,
    seed: int = 0,
    cache: DipNullCache | None = None,
) -> DipResult:
    """Dip-test a sample and flag it at the 0.05 level.

    Samples smaller than n_min are Indeterminate (no p-value); they belong to
    neither unimodality class downstream.
    """
    xs = np.asarray(sample, dtype=np.float64)
    n = int(xs.size)
    if n < n_min:
        dip = dip_statistic(xs) if n >= 1 else None
        return DipResult(n=n, dip=dip, p_value=None, flag=UnimodalityFlag.INDETERMINATE)
    dip = dip_statistic(xs)
    p = dip_pvalue(dip, n, M=M, seed=seed, n_min=n_min, cache=cache)
    flag = UnimodalityFlag.NON_UNIMODAL if p < NON_UNIMODAL_ALPHA else UnimodalityFlag.UNIMODAL
    return DipResult(n=n, dip=dip, p_value=p, flag=flag)
