"""Recursive binary-classification environment with model-labeled feedback.

Each round draws n inputs from a fixed distribution; every label comes from
the currently deployed predictor with probability alpha, otherwise from the
ground-truth target.  A learner sees the cumulative labeled sample plus the
deployment history (never the label origins) and must return the next
predictor.  The module also ships the standard three-atom hard instance
whose middle atom carries mass 1/n.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .core import ConfigurationError, ProtocolError

__all__ = [
    "Hypothesis",
    "Threshold",
    "Constant",
    "CONSTANT_ZERO",
    "CONSTANT_ONE",
    "UniformRandom",
    "XorPair",
    "DiscreteDistribution",
    "hard_distribution",
    "hard_target",
    "hard_instance",
    "true_loss",
    "LabeledExample",
    "sample_round_arrays",
    "sample_round",
    "Learner",
    "RunRecord",
    "run_recursive",
]


# ---------------------------------------------------------------------------
# Hypotheses
# ---------------------------------------------------------------------------


class Hypothesis:
    """A binary predictor over the real line with labels in {0, 1}."""

    deterministic = True

    def predict_many(self, xs: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
        raise NotImplementedError

    def predict(self, x: float, rng: np.random.Generator | None = None) -> int:
        return int(self.predict_many(np.asarray([x], dtype=float), rng)[0])


@dataclass(frozen=True)
class Threshold(Hypothesis):
    """One-dimensional threshold; ascending predicts 1 strictly above it."""

    boundary: float
    ascending: bool = True

    def predict_many(self, xs: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if self.ascending:
            return (xs > self.boundary).astype(np.int8)
        return (xs <= self.boundary).astype(np.int8)


@dataclass(frozen=True)
class Constant(Hypothesis):
    """Predicts one fixed label everywhere."""

    label: int

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ConfigurationError(f"label must be 0 or 1, got {self.label}")

    def predict_many(self, xs: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
        return np.full(len(np.asarray(xs)), self.label, dtype=np.int8)


CONSTANT_ZERO = Constant(0)
CONSTANT_ONE = Constant(1)


@dataclass(frozen=True)
class UniformRandom(Hypothesis):
    """Predicts a fair coin flip, consuming exactly one draw per prediction."""

    deterministic = False

    def predict_many(self, xs: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
        if rng is None:
            raise ConfigurationError("UniformRandom predictions require an rng")
        return rng.integers(0, 2, size=len(np.asarray(xs)), dtype=np.int8)


@dataclass(frozen=True)
class XorPair(Hypothesis):
    """Pointwise XOR of two hypotheses.

    Keeps interval-shaped correctors inside the representable class: the XOR
    of two thresholds is an interval or co-interval indicator.
    """

    first: Hypothesis
    second: Hypothesis

    @property
    def deterministic(self) -> bool:  # type: ignore[override]
        return self.first.deterministic and self.second.deterministic

    def predict_many(self, xs: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
        return self.first.predict_many(xs, rng) ^ self.second.predict_many(xs, rng)


def interval_hypothesis(low: float, high: float) -> XorPair:
    """Indicator of (low, high] as an XOR of two ascending thresholds."""
    return XorPair(Threshold(low, ascending=True), Threshold(high, ascending=True))


def co_interval_hypothesis(low: float, high: float) -> XorPair:
    """Indicator of the complement of (low, high]."""
    return XorPair(Threshold(low, ascending=True), Threshold(high, ascending=False))


def always_one_hypothesis(boundary: float = 0.0) -> XorPair:
    """Constant-one predictor expressed inside the threshold-XOR class."""
    return XorPair(Threshold(boundary, ascending=True), Threshold(boundary, ascending=False))


# ---------------------------------------------------------------------------
# Distributions and the hard instance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite input distribution given by support points and probabilities."""

    xs: tuple[float, ...]
    ps: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.xs) != len(self.ps) or len(self.xs) == 0:
            raise ConfigurationError("need matching, nonempty support and probabilities")
        if len(set(self.xs)) != len(self.xs):
            raise ConfigurationError("support points must be distinct")
        ps = np.asarray(self.ps, dtype=float)
        if ps.min() <= 0.0:
            raise ConfigurationError("probabilities must be positive")
        if abs(ps.sum() - 1.0) > 1e-12:
            raise ConfigurationError(f"probabilities sum to {ps.sum()}, expected 1")

    @property
    def support(self) -> np.ndarray:
        return np.asarray(self.xs, dtype=float)

    @property
    def probabilities(self) -> np.ndarray:
        return np.asarray(self.ps, dtype=float)

    def sample_indices(self, rng: np.random.Generator, size: int | tuple) -> np.ndarray:
        """Draw support indices by inverse transform on the cumulative mass."""
        cumulative = np.cumsum(self.probabilities)
        cumulative[-1] = 1.0
        return np.searchsorted(cumulative, rng.random(size), side="right")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.support[self.sample_indices(rng, size)]


def hard_distribution(n: int) -> DiscreteDistribution:
    """Three-atom input law {-1, 0, +1} whose middle atom has mass 1/n."""
    if int(n) != n or n < 2:
        raise ConfigurationError(f"n must be an integer >= 2, got {n}")
    side = 0.5 - 1.0 / (2.0 * n)
    return DiscreteDistribution(xs=(-1.0, 0.0, 1.0), ps=(side, 1.0 / n, side))


def hard_target() -> Threshold:
    """Ground truth for the hard instance: label 1 strictly above -1."""
    return Threshold(-1.0, ascending=True)


def hard_instance(n: int) -> tuple[DiscreteDistribution, Threshold]:
    return hard_distribution(n), hard_target()


def true_loss(h: Hypothesis, dist: DiscreteDistribution, target: Hypothesis) -> float:
    """Exact misclassification probability of h against the target.

    Any hypothesis with a random component disagrees with a deterministic
    target with probability exactly 1/2 at every point.
    """
    if not h.deterministic:
        return 0.5
    xs = dist.support
    mismatch = h.predict_many(xs) != target.predict_many(xs)
    return float(dist.probabilities[mismatch].sum())


# ---------------------------------------------------------------------------
# Round sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LabeledExample:
    """One labeled point plus the hidden provenance of its label."""

    x: float
    y: int
    origin: str  # "nature" or "model"


def sample_round_arrays(
    dist: DiscreteDistribution,
    deployed: Hypothesis | None,
    target: Hypothesis,
    alpha: float,
    n: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw one round as arrays (xs, ys, model_mask).

    Draw order is fixed: inputs first, then the per-example origin coins,
    then any prediction randomness for model-labeled points.  A deployed
    value of None means an all-natural round regardless of alpha.
    """
    alpha = float(alpha)
    if not (0.0 <= alpha <= 1.0):
        raise ConfigurationError(f"alpha must lie in [0, 1], got {alpha}")
    if int(n) != n or n < 1:
        raise ConfigurationError(f"n must be an integer >= 1, got {n}")
    xs = dist.sample(rng, int(n))
    ys = target.predict_many(xs)
    if deployed is None:
        mask = np.zeros(int(n), dtype=bool)
        return xs, ys, mask
    mask = rng.random(int(n)) < alpha
    if mask.any():
        ys = ys.copy()
        ys[mask] = deployed.predict_many(xs[mask], rng)
    return xs, ys, mask


def sample_round(
    dist: DiscreteDistribution,
    deployed: Hypothesis | None,
    target: Hypothesis,
    alpha: float,
    n: int,
    rng: np.random.Generator,
) -> list[LabeledExample]:
    """Object view of one sampled round, in draw order."""
    xs, ys, mask = sample_round_arrays(dist, deployed, target, alpha, n, rng)
    return [
        LabeledExample(float(x), int(y), "model" if m else "nature")
        for x, y, m in zip(xs, ys, mask)
    ]


# ---------------------------------------------------------------------------
# Recursive training loop
# ---------------------------------------------------------------------------


@runtime_checkable
class Learner(Protocol):
    """Consumes the cumulative labeled sample and deployment history.

    The view passed to ``propose`` deliberately omits label origins; the
    learner cannot tell natural from model-generated labels.
    """

    name: str

    def propose(
        self,
        xs: np.ndarray,
        ys: np.ndarray,
        history: tuple[Hypothesis, ...],
        n: int,
        t: int,
        rng: np.random.Generator,
    ) -> Hypothesis: ...


@dataclass(frozen=True)
class RunRecord:
    """Exact loss of the deployed hypothesis after round t."""

    learner: str
    alpha: float
    n: int
    t: int
    loss: float
    replicate: int


def run_recursive(
    dist: DiscreteDistribution,
    target: Hypothesis,
    alpha: float,
    n: int,
    horizon: int,
    learner: Learner,
    rng: np.random.Generator,
    replicate: int = 0,
    keep_examples: bool = False,
) -> list[RunRecord] | tuple[list[RunRecord], list[LabeledExample], list[Hypothesis]]:
    """Run the deploy-and-retrain loop and record per-round exact losses.

    Round 0 is all-natural; round t >= 1 is labeled by the hypothesis fitted
    after round t-1.  Returns horizon + 1 records.  With keep_examples the
    full example list (with origins) and hypothesis sequence come back too,
    for diagnostics that need provenance.
    """
    if int(horizon) != horizon or horizon < 0:
        raise ConfigurationError(f"horizon must be an integer >= 0, got {horizon}")
    records: list[RunRecord] = []
    all_examples: list[LabeledExample] = []
    hypotheses: list[Hypothesis] = []
    xs_parts: list[np.ndarray] = []
    ys_parts: list[np.ndarray] = []
    current: Hypothesis | None = None
    for t in range(0, int(horizon) + 1):
        xs, ys, mask = sample_round_arrays(dist, current, target, alpha, n, rng)
        xs_parts.append(xs)
        ys_parts.append(ys)
        if keep_examples:
            all_examples.extend(
                LabeledExample(float(x), int(y), "model" if m else "nature")
                for x, y, m in zip(xs, ys, mask)
            )
        proposed = learner.propose(
            np.concatenate(xs_parts),
            np.concatenate(ys_parts),
            tuple(hypotheses),
            int(n),
            t,
            rng,
        )
        if not isinstance(proposed, Hypothesis):
            raise ProtocolError(
                f"learner {learner.name!r} returned {type(proposed).__name__}, "
                "expected a Hypothesis"
            )
        hypotheses.append(proposed)
        current = proposed
        records.append(
            RunRecord(
                learner=learner.name,
                alpha=float(alpha),
                n=int(n),
                t=t,
                loss=true_loss(proposed, dist, target),
                replicate=int(replicate),
            )
        )
    if keep_examples:
        return records, all_examples, hypotheses
    return records
