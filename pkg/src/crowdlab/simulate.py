"""Synthetic crowds with known ground-truth social weights.

Agents hold log-normal beliefs around the round's truth, act once per round
in a seeded random order, observe the pre-social predictions submitted
earlier by others, and revise log-linearly with their assigned weight:

    post = exp((1 - sw) * log(pre) + sw * log(crowd_geomean) + noise)

The first ``min_prior`` agents of a round see no crowd and keep their
pre-social prediction, mirroring a cold start and exercising the
insufficient-prior path downstream.  Noise enters in log space, so prices
stay positive.

Crowd modes shape the pre-social cloud:

* ``accurate``  — agents displaced by +/- log(pre_bias) (alternating by
  agent parity), so individuals are biased away from the truth while the
  crowd's geometric mean stays on it.
* ``biased``    — same, with the whole cloud shifted by ``crowd_offset``.
* ``bimodal``   — two clusters at +/- separation/2 (log space), symmetric
  about the truth: the crowd mean stays accurate while unimodality fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

import numpy as np

from .dataset import Dataset, PredictionRecord, Round, geometric_mean
from .errors import NonPositiveInputError, ScenarioError


class CrowdMode(str, Enum):
    ACCURATE = "accurate"
    BIASED = "biased"
    BIMODAL = "bimodal"


@dataclass(frozen=True)
class SwDistribution:
    """Per-agent social-weight law: constant, uniform, or two-point mixture."""

    kind: str  # constant | uniform | two_point
    value: float = 0.0
    low: float = -1.0
    high: float = 1.0
    values: tuple[float, float] = (0.0, 0.0)
    weights: tuple[float, float] = (0.5, 0.5)

    def validate(self) -> None:
        if self.kind == "constant":
            bounds = [self.value]
        elif self.kind == "uniform":
            if self.low > self.high:
                raise ScenarioError(f"uniform bounds inverted: [{self.low}, {self.high}]")
            bounds = [self.low, self.high]
        elif self.kind == "two_point":
            if len(self.values) != 2 or len(self.weights) != 2:
                raise ScenarioError("two_point needs exactly two values and two weights")
            if min(self.weights) < 0 or abs(sum(self.weights) - 1.0) > 1e-9:
                raise ScenarioError(f"two_point weights must be a distribution, got {self.weights}")
            bounds = list(self.values)
        else:
            raise ScenarioError(f"unknown sw distribution kind {self.kind!r}")
        if any(not -1.0 <= b <= 1.0 for b in bounds):
            raise ScenarioError(f"social weights must lie within [-1, 1], got {bounds}")

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(size, self.value)
        if self.kind == "uniform":
            return rng.uniform(self.low, self.high, size=size)
        return rng.choice(np.asarray(self.values), size=size, p=np.asarray(self.weights))

    @classmethod
    def from_mapping(cls, data: Mapping) -> "SwDistribution":
        kwargs = dict(data)
        for key in ("values", "weights"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


@dataclass(frozen=True)
class ScenarioSpec:
    n_rounds: int
    truth_per_round: tuple[float, ...]
    n_agents: int
    sw_distribution: SwDistribution
    pre_bias: float = 1.0  # multiplicative displacement of individual beliefs
    pre_sigma: float = 0.05  # log-space belief dispersion
    crowd_mode: CrowdMode = CrowdMode.ACCURATE
    crowd_offset: float = 1.0  # biased mode: multiplicative crowd shift
    separation: float = 0.0  # bimodal mode: log-space cluster distance
    cluster_weights: tuple[float, float] = (0.5, 0.5)
    noise_sigma: float = 0.0  # log-space update noise
    min_prior: int = 3
    seed: int = 0
    round_prefix: str = "round"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.n_rounds < 1:
            raise ScenarioError(f"n_rounds must be >= 1, got {self.n_rounds}")
        if len(self.truth_per_round) != self.n_rounds:
            raise ScenarioError(
                f"need {self.n_rounds} truths, got {len(self.truth_per_round)}"
            )
        if any(t <= 0 for t in self.truth_per_round):
            raise ScenarioError("truths must be > 0")
        if self.n_agents < 1:
            raise ScenarioError(f"n_agents must be >= 1, got {self.n_agents}")
        if self.pre_bias <= 0 or self.crowd_offset <= 0:
            raise ScenarioError("pre_bias and crowd_offset are multiplicative, must be > 0")
        if self.pre_sigma < 0 or self.noise_sigma < 0:
            raise ScenarioError("sigmas must be >= 0")
        if self.separation < 0:
            raise ScenarioError(f"separation must be >= 0, got {self.separation}")
        if min(self.cluster_weights) < 0 or abs(sum(self.cluster_weights) - 1.0) > 1e-9:
            raise ScenarioError(f"cluster_weights must be a distribution, got {self.cluster_weights}")
        if self.min_prior < 1:
            raise ScenarioError(f"min_prior must be >= 1, got {self.min_prior}")
        if self.seed < 0:
            raise ScenarioError(f"seed must be >= 0, got {self.seed}")
        self.sw_distribution.validate()

    @classmethod
    def from_mapping(cls, data: Mapping) -> "ScenarioSpec":
        kwargs = dict(data)
        try:
            kwargs["sw_distribution"] = SwDistribution.from_mapping(kwargs.pop("sw"))
        except KeyError:
            raise ScenarioError("scenario config needs an 'sw' table") from None
        if "crowd_mode" in kwargs:
            kwargs["crowd_mode"] = CrowdMode(kwargs["crowd_mode"])
        for key in ("truth_per_round", "cluster_weights"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ScenarioError(f"bad scenario config: {exc}") from None


def apply_social_update(pre: float, geomean: float, sw: float, noise: float = 0.0) -> float:
    """Log-linear revision toward (or away from) the crowd mean.

    Evaluated as pre * exp(sw * (log(geomean) - log(pre)) + noise), which is
    the same model rearranged so that a zero weight with zero noise returns
    the pre-social price exactly.
    """
    if pre <= 0 or geomean <= 0:
        raise NonPositiveInputError(f"prices must be > 0, got {(pre, geomean)}")
    return pre * math.exp(sw * (math.log(geomean) - math.log(pre)) + noise)


def _displacement(spec: ScenarioSpec, agent: int, rng: np.random.Generator) -> float:
    if spec.crowd_mode is CrowdMode.BIMODAL:
        half = spec.separation / 2.0
        return -half if rng.random() < spec.cluster_weights[0] else half
    sign = 1.0 if agent % 2 == 0 else -1.0
    return sign * math.log(spec.pre_bias)


def generate_dataset(spec: ScenarioSpec) -> tuple[Dataset, dict[str, float]]:
    """Synthesize a dataset plus the true social weight of every exposed record.

    Deterministic given the scenario (including its seed); the emitted
    dataset round-trips through the CSV schema unchanged.
    """
    rng = np.random.default_rng([spec.seed, 0])
    agent_sw = spec.sw_distribution.draw(rng, spec.n_agents)
    offset = math.log(spec.crowd_offset) if spec.crowd_mode is CrowdMode.BIASED else 0.0

    rounds = []
    ground_truth: dict[str, float] = {}
    for r in range(spec.n_rounds):
        truth = spec.truth_per_round[r]
        round_id = f"{spec.round_prefix}{r + 1:02d}"
        order = rng.permutation(spec.n_agents)
        records = []
        prior_pres: list[float] = []
        for pos, agent in enumerate(order):
            log_pre = (
                math.log(truth)
                + offset
                + _displacement(spec, int(agent), rng)
                + rng.normal(0.0, spec.pre_sigma)
            )
            pre = math.exp(log_pre)
            record_id = f"{round_id}-e{pos:04d}"
            if pos >= spec.min_prior:
                crowd_mean = geometric_mean(prior_pres)
                noise = rng.normal(0.0, spec.noise_sigma)
                sw = float(agent_sw[agent])
                post = apply_social_update(pre, crowd_mean, sw, noise)
                ground_truth[record_id] = sw
            else:
                post = pre  # cold start: no crowd shown, no revision
            records.append(
                PredictionRecord(
                    record_id=record_id,
                    round_id=round_id,
                    user_id=f"u{int(agent):04d}",
                    timestamp=pos,
                    pre_social=pre,
                    post_social=post,
                )
            )
            prior_pres.append(pre)
        rounds.append(Round(round_id=round_id, truth=truth, records=tuple(records)))
    dataset = Dataset(
        rounds=tuple(rounds),
        meta={"source": "simulator", "seed": str(spec.seed)},
    )
    return dataset, ground_truth


def merge_generated(
    parts: list[tuple[Dataset, dict[str, float]]]
) -> tuple[Dataset, dict[str, float]]:
    """Combine independently generated datasets (round ids must not clash)."""
    rounds: list[Round] = []
    ground_truth: dict[str, float] = {}
    for dataset, truths in parts:
        rounds.extend(dataset.rounds)
        ground_truth.update(truths)
    merged = Dataset(
        rounds=tuple(sorted(rounds, key=lambda r: r.round_id)),
        meta={"source": "simulator-merge"},
    )
    return merged, ground_truth


# --- canned scenarios used by the test suite and the docs -------------------


def accurate_crowd_scenario(
    seed: int = 7,
    n_rounds: int = 6,
    n_agents: int = 200,
    noise_sigma: float = 0.0,
) -> ScenarioSpec:
    """Individuals biased away from the truth, crowd mean on it, mixed weights.

    Positive-weight movers must gain and negative-weight movers must lose, so
    the improvement sweep is positive at positive thresholds and negative at
    negative ones.
    """
    return ScenarioSpec(
        n_rounds=n_rounds,
        truth_per_round=tuple(90.0 + 20.0 * r for r in range(n_rounds)),
        n_agents=n_agents,
        sw_distribution=SwDistribution(kind="uniform", low=-0.9, high=0.9),
        pre_bias=3.0,
        pre_sigma=0.04,
        crowd_mode=CrowdMode.ACCURATE,
        noise_sigma=noise_sigma,
        seed=seed,
    )


def unimodality_contrast_dataset(
    seed: int = 11,
    n_agents: int = 150,
) -> tuple[Dataset, dict[str, float]]:
    """Composite dataset isolating the unimodality effect.

    Two rounds show a tight accurate crowd to positive-weight agents (they
    must improve); one round shows a wide symmetric bimodal crowd to a +/-
    weight mixture (gains and losses balance), so only the unimodal-exposure
    class improves.  The bimodal part runs as a single round so its
    (round, user) entries stay independent.
    """
    uni = ScenarioSpec(
        n_rounds=2,
        truth_per_round=(100.0, 115.0),
        n_agents=n_agents,
        sw_distribution=SwDistribution(kind="uniform", low=0.3, high=0.7),
        pre_bias=1.0,
        pre_sigma=0.06,
        crowd_mode=CrowdMode.ACCURATE,
        seed=seed,
        round_prefix="uni",
    )
    bim = ScenarioSpec(
        n_rounds=1,
        truth_per_round=(100.0,),
        n_agents=2 * n_agents,
        sw_distribution=SwDistribution(kind="two_point", values=(-0.4, 0.4)),
        pre_sigma=0.05,
        crowd_mode=CrowdMode.BIMODAL,
        separation=3.0,
        seed=seed + 1,
        round_prefix="bim",
    )
    return merge_generated([generate_dataset(uni), generate_dataset(bim)])
