"""Learning rules for the recursive environment.

Two threshold ERM fits (margin-seeking and plain disagreement-minimizing),
a randomized-probe learner that occasionally deploys a coin to harvest
labels with bounded noise, a positive/unlabeled interval learner, and an
epoch-doubling learner that repairs its predictor with PU corrections.
All tie-breaks are deterministic so every fit is reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from importlib import resources
from typing import Sequence

import numpy as np

from .core import ConfigurationError
from .pac_env import (
    CONSTANT_ONE,
    CONSTANT_ZERO,
    DiscreteDistribution,
    Hypothesis,
    Threshold,
    UniformRandom,
    XorPair,
    always_one_hypothesis,
    co_interval_hypothesis,
    interval_hypothesis,
    sample_round_arrays,
)

__all__ = [
    "erm_maxmargin",
    "erm_noisy",
    "RepeatedMaxMarginLearner",
    "RepeatedNoisyErmLearner",
    "UniformMixingLearner",
    "pu_learn",
    "EpochSettings",
    "load_epoch_defaults",
    "EpochPlan",
    "epoch_schedule",
    "EpochState",
    "epoch_update",
    "EpochPuLearner",
    "estimate_alpha",
    "LEARNER_REGISTRY",
    "make_learner",
]


# ---------------------------------------------------------------------------
# Threshold ERM
# ---------------------------------------------------------------------------


def _as_xy(xs: Sequence[float], ys: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=np.int8)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size == 0:
        raise ConfigurationError("need matching nonempty 1-d inputs and labels")
    if not np.isin(ys, (0, 1)).all():
        raise ConfigurationError("labels must be 0 or 1")
    return xs, ys


def _fit_threshold(xs: np.ndarray, ys: np.ndarray) -> Threshold:
    """Disagreement-minimizing threshold with deterministic tie-breaks.

    Constant-label samples return a one-sided ascending threshold with the
    boundary one unit beyond the data.  Otherwise candidate boundaries are
    the midpoints between consecutive distinct inputs plus a sentinel on
    each side; ties break toward the smallest boundary, then toward the
    ascending orientation.  On a separable sample the single zero-error
    candidate sits mid-gap, which is also the widest-margin separator.
    """
    ones = int(ys.sum())
    if ones == 0:
        return Threshold(float(xs.max()) + 1.0, ascending=True)
    if ones == len(ys):
        return Threshold(float(xs.min()) - 1.0, ascending=True)

    values = np.unique(xs)
    boundaries = np.concatenate(
        ([values[0] - 1.0], (values[:-1] + values[1:]) / 2.0, [values[-1] + 1.0])
    )
    # group label counts by distinct value, then prefix-sum
    idx = np.searchsorted(values, xs)
    ones_at = np.bincount(idx, weights=ys, minlength=len(values))
    totals_at = np.bincount(idx, minlength=len(values))
    ones_below = np.concatenate(([0.0], np.cumsum(ones_at)))
    totals_below = np.concatenate(([0.0], np.cumsum(totals_at)))
    total_ones = ones_below[-1]
    total = totals_below[-1]
    # ascending at boundary b_j: errors = ones at or below + zeros above
    asc_errors = ones_below + (total - totals_below) - (total_ones - ones_below)
    desc_errors = (totals_below - ones_below) + (total_ones - ones_below)

    best = None
    for errors, ascending in ((asc_errors, True), (desc_errors, False)):
        for j, boundary in enumerate(boundaries):
            key = (int(errors[j]), float(boundary), 0 if ascending else 1)
            if best is None or key < best[0]:
                best = (key, Threshold(float(boundary), ascending=ascending))
    return best[1]


def erm_maxmargin(xs: Sequence[float], ys: Sequence[int]) -> Threshold:
    """Margin-seeking threshold ERM over both orientations."""
    return _fit_threshold(*_as_xy(xs, ys))


def erm_noisy(xs: Sequence[float], ys: Sequence[int]) -> Threshold:
    """Plain disagreement-minimizing threshold ERM (noise-tolerant use)."""
    return _fit_threshold(*_as_xy(xs, ys))


@dataclass
class RepeatedMaxMarginLearner:
    """Refits the margin-seeking ERM on the full cumulative sample each round."""

    name: str = "erm_maxmargin"

    def propose(self, xs, ys, history, n, t, rng) -> Hypothesis:
        return erm_maxmargin(xs, ys)


@dataclass
class RepeatedNoisyErmLearner:
    """Refits the plain ERM on the full cumulative sample each round."""

    name: str = "erm_noisy_repeated"

    def propose(self, xs, ys, history, n, t, rng) -> Hypothesis:
        return erm_noisy(xs, ys)


# ---------------------------------------------------------------------------
# Randomized-probe learner
# ---------------------------------------------------------------------------


@dataclass
class UniformMixingLearner:
    """Occasionally deploys a fair coin; otherwise fits on low-noise rounds.

    With probability 1/sqrt(n (t+1)) the proposal is the coin predictor.
    The ERM fit uses only the all-natural round 0 plus rounds whose labels
    were produced while a coin was deployed; those labels are wrong with
    probability exactly alpha/2, independent of any feedback loop.
    """

    name: str = "uniform_mixing"

    def propose(self, xs, ys, history, n, t, rng) -> Hypothesis:
        probability = 1.0 / math.sqrt(n * (t + 1))
        deploy_coin = rng.random() < probability
        if deploy_coin:
            return UniformRandom()
        keep = np.zeros(len(xs), dtype=bool)
        keep[:n] = True  # round 0 is always natural
        for r in range(1, t + 1):
            if isinstance(history[r - 1], UniformRandom):
                keep[r * n : (r + 1) * n] = True
        return erm_noisy(np.asarray(xs)[keep], np.asarray(ys)[keep])


# ---------------------------------------------------------------------------
# Positive/unlabeled interval learner
# ---------------------------------------------------------------------------


def _interval_candidates(values: np.ndarray) -> list[tuple[int, float, float]]:
    """Candidate (kind, low, high) triples over midpoint boundaries.

    kind 0 is an interval (low, high], kind 1 its complement, kind 2 the
    constant-one predictor.  Boundaries include one sentinel beyond each
    side of the data, standing in for the two infinities.
    """
    boundaries = np.concatenate(
        ([values[0] - 1.0], (values[:-1] + values[1:]) / 2.0, [values[-1] + 1.0])
    )
    out: list[tuple[int, float, float]] = []
    for i in range(len(boundaries)):
        for j in range(i + 1, len(boundaries)):
            out.append((0, float(boundaries[i]), float(boundaries[j])))
            out.append((1, float(boundaries[i]), float(boundaries[j])))
    out.append((2, float(boundaries[-1]), float(boundaries[-1])))
    return out


def _realize_interval(kind: int, low: float, high: float) -> XorPair:
    if kind == 0:
        return interval_hypothesis(low, high)
    if kind == 1:
        return co_interval_hypothesis(low, high)
    return always_one_hypothesis(low)


def pu_learn(positives: Sequence[float], unlabeled: Sequence[float]) -> XorPair:
    """Fit an interval-shaped hypothesis from positive and unlabeled points.

    Returns the candidate that predicts 1 on every positive while predicting
    1 on as few unlabeled points as possible; ties break toward intervals
    over complements, then lexicographically smallest boundaries.
    """
    positives = np.asarray(positives, dtype=float)
    unlabeled = np.asarray(unlabeled, dtype=float)
    if positives.size == 0:
        raise ConfigurationError("need at least one positive example")
    values = np.unique(np.concatenate((positives, unlabeled)))
    best = None
    for kind, low, high in _interval_candidates(values):
        h = _realize_interval(kind, low, high)
        if not h.predict_many(positives).all():
            continue
        covered = int(h.predict_many(unlabeled).sum()) if unlabeled.size else 0
        key = (covered, kind, low, high)
        if best is None or key < best[0]:
            best = (key, h)
    return best[1]


# ---------------------------------------------------------------------------
# Epoch-doubling learner with PU corrections
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EpochSettings:
    """Frozen sizing constants for the epoch learner."""

    vc_dim: int = 2
    c_positive: float = 1.0
    c_unlabeled: float = 1.0


def load_epoch_defaults() -> EpochSettings:
    """Read the checked-in default constants shipped with the package."""
    payload = json.loads(
        resources.files("contamlab").joinpath("data/epoch_defaults.json").read_text()
    )
    return EpochSettings(**payload)


@dataclass(frozen=True)
class EpochPlan:
    """Derived sizes for one epoch: targets, labeled budget, round count."""

    epoch: int
    accuracy: float  # epoch error target, halves every epoch
    confidence: float  # failure budget, equal to the accuracy target
    positive_target: int
    unlabeled_target: int
    labeled_budget: int
    rounds: int


def epoch_schedule(alpha: float, n: int, settings: EpochSettings, epoch: int) -> EpochPlan:
    """Size epoch k so the PU step has enough positives and unlabeled points."""
    if not (0.0 <= float(alpha) < 1.0):
        raise ConfigurationError(f"epoch sizing requires alpha in [0, 1), got {alpha}")
    if int(n) != n or n < 1:
        raise ConfigurationError(f"n must be an integer >= 1, got {n}")
    if int(epoch) != epoch or epoch < 1:
        raise ConfigurationError(f"epoch must be an integer >= 1, got {epoch}")
    eps = 2.0 ** (-epoch)
    delta = eps
    complexity = settings.vc_dim * math.log(1.0 / eps) + math.log(2.0 / delta)
    p_target = math.ceil(settings.c_positive * complexity / eps)
    u_target = math.ceil(settings.c_unlabeled * complexity / eps)
    budget = math.ceil(p_target * 8.0 * math.log(2.0 / delta) / ((1.0 - alpha) * eps))
    budget += u_target
    return EpochPlan(
        epoch=int(epoch),
        accuracy=eps,
        confidence=delta,
        positive_target=p_target,
        unlabeled_target=u_target,
        labeled_budget=budget,
        rounds=math.ceil(budget / n),
    )


@dataclass(frozen=True)
class EpochState:
    """Deployed hypothesis plus the buffer collected during the current epoch."""

    deployed: Hypothesis
    plan: EpochPlan
    buffer_xs: np.ndarray
    buffer_ys: np.ndarray


def epoch_update(state: EpochState) -> Hypothesis:
    """End-of-epoch PU correction step.

    Relabels the buffer against the deployed predictor, takes disagreements
    in the leading block as positives and the trailing block as unlabeled,
    and XOR-composes the fitted corrector onto the deployed predictor.  If
    too few positives surfaced, the deployed predictor is kept unchanged.
    """
    xs, ys = state.buffer_xs, state.buffer_ys
    plan = state.plan
    if xs.size < plan.unlabeled_target + 1:
        raise ConfigurationError(
            f"buffer of {xs.size} is smaller than the unlabeled target {plan.unlabeled_target}"
        )
    flipped = ys ^ state.deployed.predict_many(xs)
    split = xs.size - plan.unlabeled_target
    positives = xs[:split][flipped[:split] == 1]
    unlabeled = xs[split:]
    if positives.size >= plan.positive_target and unlabeled.size >= plan.unlabeled_target:
        corrector = pu_learn(positives, unlabeled)
        return XorPair(corrector, state.deployed)
    return state.deployed


@dataclass
class EpochPuLearner:
    """Epoch-doubling learner: deploy fixed predictor, then PU-correct it.

    The first proposal is the margin-seeking ERM on round 0.  Afterwards the
    deployed predictor stays fixed for a scheduled number of rounds whose
    labels fill a buffer; at each epoch boundary the buffer feeds one PU
    correction and the accuracy target halves.
    """

    alpha: float
    n: int
    settings: EpochSettings | None = None
    name: str = "epoch_pu"

    def __post_init__(self) -> None:
        if self.settings is None:
            self.settings = load_epoch_defaults()
        self._state: EpochState | None = None
        self._rounds_left = 0

    def propose(self, xs, ys, history, n, t, rng) -> Hypothesis:
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=np.int8)
        if t == 0:
            first = erm_maxmargin(xs, ys)
            plan = epoch_schedule(self.alpha, self.n, self.settings, 1)
            self._state = EpochState(
                deployed=first,
                plan=plan,
                buffer_xs=np.empty(0),
                buffer_ys=np.empty(0, dtype=np.int8),
            )
            self._rounds_left = plan.rounds
            return first
        state = self._state
        if state is None:
            raise ConfigurationError("epoch learner must start at round 0")
        fresh = slice(len(xs) - n, len(xs))
        state = replace(
            state,
            buffer_xs=np.concatenate((state.buffer_xs, xs[fresh])),
            buffer_ys=np.concatenate((state.buffer_ys, ys[fresh])),
        )
        self._rounds_left -= 1
        if self._rounds_left == 0:
            corrected = epoch_update(state)
            next_plan = epoch_schedule(self.alpha, self.n, self.settings, state.plan.epoch + 1)
            state = EpochState(
                deployed=corrected,
                plan=next_plan,
                buffer_xs=np.empty(0),
                buffer_ys=np.empty(0, dtype=np.int8),
            )
            self._rounds_left = next_plan.rounds
        self._state = state
        return state.deployed


# ---------------------------------------------------------------------------
# Contamination-weight estimation
# ---------------------------------------------------------------------------


def estimate_alpha(
    dist: DiscreteDistribution,
    target: Hypothesis,
    alpha: float,
    n: int,
    rng: np.random.Generator,
) -> float:
    """Estimate the contamination weight with two probe deployments.

    Deploying the all-zeros predictor then the all-ones predictor shifts the
    count of observed 1-labels by exactly alpha * n in expectation; the
    clamped count difference over n estimates alpha.
    """
    _, ys_zero, _ = sample_round_arrays(dist, CONSTANT_ZERO, target, alpha, n, rng)
    _, ys_one, _ = sample_round_arrays(dist, CONSTANT_ONE, target, alpha, n, rng)
    raw = (int(ys_one.sum()) - int(ys_zero.sum())) / float(n)
    return float(min(1.0, max(0.0, raw)))


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


def _make_erm(alpha: float, n: int) -> RepeatedMaxMarginLearner:
    return RepeatedMaxMarginLearner()


def _make_noisy(alpha: float, n: int) -> RepeatedNoisyErmLearner:
    return RepeatedNoisyErmLearner()


def _make_mixing(alpha: float, n: int) -> UniformMixingLearner:
    return UniformMixingLearner()


def _make_epoch(alpha: float, n: int) -> EpochPuLearner:
    return EpochPuLearner(alpha=alpha, n=n)


LEARNER_REGISTRY = {
    "erm_maxmargin": _make_erm,
    "erm_noisy_repeated": _make_noisy,
    "uniform_mixing": _make_mixing,
    "epoch_pu": _make_epoch,
}


def make_learner(name: str, alpha: float, n: int):
    """Instantiate a fresh learner by registry name."""
    try:
        factory = LEARNER_REGISTRY[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown learner {name!r}; known: {sorted(LEARNER_REGISTRY)}"
        ) from None
    return factory(alpha, n)
