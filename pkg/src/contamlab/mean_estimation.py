"""Monte Carlo simulator for mean estimation on self-contaminated samples.

Round 1 draws clean data around the true mean; every later round's sample is
pulled toward the previous round's pooled estimate by a mixing weight alpha.
A weighting scheme turns the per-round observations into the pooled estimate.
The simulator measures estimator variance empirically so the closed forms in
``variance`` can be checked against an independent route.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import ConfigurationError, MomentAccumulator, covariance_factor, substream

__all__ = [
    "ContaminationConfig",
    "WeightingScheme",
    "UniformWeights",
    "SimpleWeights",
    "AnchorWeights",
    "CustomWeights",
    "scheme_row",
    "Trajectory",
    "simulate_trajectory",
    "MonteCarloVariance",
    "monte_carlo_variance",
]


@dataclass(frozen=True)
class ContaminationConfig:
    """Process parameters: mixing weight, true mean, noise covariance, horizon."""

    alpha: float
    mu: np.ndarray
    sigma: np.ndarray
    horizon: int

    def __post_init__(self) -> None:
        alpha = float(self.alpha)
        if not (0.0 <= alpha <= 1.0):
            raise ConfigurationError(f"alpha must lie in [0, 1], got {alpha}")
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        if mu.ndim != 1 or mu.size < 1:
            raise ConfigurationError(f"mu must be a vector, got shape {mu.shape}")
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.ndim == 0:
            sigma = float(sigma) * np.eye(mu.size)
        elif sigma.ndim == 1:
            if sigma.size != mu.size:
                raise ConfigurationError("diagonal sigma length must match mu")
            sigma = np.diag(sigma)
        if sigma.shape != (mu.size, mu.size):
            raise ConfigurationError(
                f"sigma shape {sigma.shape} does not match dimension {mu.size}"
            )
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ConfigurationError(f"horizon must be an integer >= 1, got {self.horizon}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "horizon", int(self.horizon))
        object.__setattr__(self, "_chol", covariance_factor(sigma))

    @property
    def dimension(self) -> int:
        return self.mu.size

    def noise_factor(self) -> np.ndarray:
        return self._chol  # type: ignore[attr-defined]


class WeightingScheme:
    """Maps a round count t to a simplex weight row over rounds 1..t."""

    tag = "base"

    def row(self, t: int) -> np.ndarray:
        raise NotImplementedError

    def _check_t(self, t: int) -> int:
        if int(t) != t or t < 1:
            raise ConfigurationError(f"t must be an integer >= 1, got {t}")
        return int(t)


class UniformWeights(WeightingScheme):
    """Equal weight 1/t on every round seen so far."""

    tag = "uniform"

    def row(self, t: int) -> np.ndarray:
        t = self._check_t(t)
        return np.full(t, 1.0 / t)


class SimpleWeights(WeightingScheme):
    """All weight on the single clean first round."""

    tag = "simple"

    def row(self, t: int) -> np.ndarray:
        t = self._check_t(t)
        out = np.zeros(t)
        out[0] = 1.0
        return out


class AnchorWeights(WeightingScheme):
    """First round upweighted, later rounds discounted by (1 - alpha).

    Row t is (1, 1-alpha, ..., 1-alpha) / g_t with g_t = 1 + (t-1)(1-alpha),
    so each row sums to one exactly.
    """

    tag = "anchored"

    def __init__(self, alpha: float) -> None:
        alpha = float(alpha)
        if not (0.0 <= alpha <= 1.0):
            raise ConfigurationError(f"alpha must lie in [0, 1], got {alpha}")
        self.alpha = alpha

    def row(self, t: int) -> np.ndarray:
        t = self._check_t(t)
        g = 1.0 + (t - 1) * (1.0 - self.alpha)
        out = np.full(t, (1.0 - self.alpha) / g)
        out[0] = 1.0 / g
        return out


class CustomWeights(WeightingScheme):
    """Explicit per-round weight rows, validated to be simplex rows."""

    tag = "custom"

    def __init__(self, rows: Sequence[Sequence[float]]) -> None:
        checked = []
        for t, row in enumerate(rows, start=1):
            arr = np.asarray(row, dtype=float)
            if arr.shape != (t,):
                raise ConfigurationError(f"row {t} must have length {t}, got {arr.shape}")
            if arr.min(initial=0.0) < 0.0 or abs(arr.sum() - 1.0) > 1e-12:
                raise ConfigurationError(f"row {t} is not a simplex weighting")
            checked.append(arr)
        if not checked:
            raise ConfigurationError("need at least one weight row")
        self._rows = checked

    def row(self, t: int) -> np.ndarray:
        t = self._check_t(t)
        if t > len(self._rows):
            raise ConfigurationError(f"no row defined for t={t}")
        return self._rows[t - 1].copy()


def scheme_row(scheme: WeightingScheme, t: int) -> np.ndarray:
    """Weight row of a scheme at round t (length t, nonnegative, sums to 1)."""
    return scheme.row(t)


@dataclass(frozen=True)
class Trajectory:
    """One simulated path: per-round samples xs and pooled estimates ys."""

    xs: np.ndarray  # (horizon, d)
    ys: np.ndarray  # (horizon, d)


def simulate_trajectory(
    config: ContaminationConfig, scheme: WeightingScheme, rng: np.random.Generator
) -> Trajectory:
    """Simulate one path of the contaminated process under a weighting scheme.

    Reference implementation: recomputes the pooled estimate from the full
    weight row each round, so any scheme (including custom rows) works.
    """
    d = config.dimension
    chol = config.noise_factor()
    xs = np.empty((config.horizon, d))
    ys = np.empty((config.horizon, d))
    for t in range(1, config.horizon + 1):
        noise = chol @ rng.standard_normal(d)
        if t == 1:
            xs[0] = config.mu + noise
        else:
            xs[t - 1] = config.alpha * ys[t - 2] + (1.0 - config.alpha) * config.mu + noise
        ys[t - 1] = scheme.row(t) @ xs[:t]
    return Trajectory(xs=xs, ys=ys)


@dataclass(frozen=True)
class MonteCarloVariance:
    """Empirical estimator variance by round, with batch-level standard errors."""

    ts: np.ndarray
    trace_var: np.ndarray
    stderr: np.ndarray
    mean: np.ndarray  # (len(ts), d) replicate mean of the estimate
    replicates: int
    seed: int
    covariances: np.ndarray | None = field(default=None, compare=False)


def _step_lanes(
    config: ContaminationConfig,
    scheme: WeightingScheme,
    rng: np.random.Generator,
    lanes: int,
    sink,
) -> None:
    """Advance `lanes` independent paths through the horizon, reporting each round.

    Uniform, simple, and anchored schemes use O(1)-state pooled updates; any
    other scheme falls back to keeping the sample history and applying the
    full weight row.
    """
    d = config.dimension
    alpha = config.alpha
    chol_t = config.noise_factor().T
    mu = config.mu
    generic = not isinstance(scheme, (UniformWeights, SimpleWeights, AnchorWeights))
    history = np.empty((config.horizon, lanes, d)) if generic else None
    y = np.empty((lanes, d))
    running = np.zeros((lanes, d))
    for t in range(1, config.horizon + 1):
        noise = rng.standard_normal((lanes, d)) @ chol_t
        if t == 1:
            x = mu + noise
        else:
            x = alpha * y + (1.0 - alpha) * mu + noise
        if generic:
            history[t - 1] = x
            y = np.tensordot(scheme.row(t), history[:t], axes=1)
        elif isinstance(scheme, UniformWeights):
            running += x
            y = running / t
        elif isinstance(scheme, SimpleWeights):
            if t == 1:
                y = x.copy()
        else:  # AnchorWeights
            if t == 1:
                y = x.copy()
            else:
                g_prev = 1.0 + (t - 2) * (1.0 - scheme.alpha)
                g_cur = 1.0 + (t - 1) * (1.0 - scheme.alpha)
                y = (g_prev * y + (1.0 - scheme.alpha) * x) / g_cur
        sink(t, y)


def monte_carlo_variance(
    config: ContaminationConfig,
    scheme: WeightingScheme,
    replicates: int,
    seed: int,
    ts: Sequence[int] | None = None,
    batch_size: int = 4096,
    keep_covariances: bool = False,
) -> MonteCarloVariance:
    """Estimate trace variance of the pooled estimate at each requested round.

    Replicates run in deterministic lane batches; each batch draws from its
    own content-keyed stream, so results do not depend on batch scheduling.
    The standard error is the spread of per-batch trace estimates.
    """
    if replicates < 2:
        raise ConfigurationError(f"need at least 2 replicates, got {replicates}")
    if batch_size < 2:
        raise ConfigurationError(f"batch_size must be >= 2, got {batch_size}")
    want = np.arange(1, config.horizon + 1) if ts is None else np.asarray(sorted(ts), dtype=int)
    if want.size == 0 or want[0] < 1 or want[-1] > config.horizon:
        raise ConfigurationError("requested rounds must lie in 1..horizon")
    if np.unique(want).size != want.size:
        raise ConfigurationError("requested rounds must be distinct")
    slot = {int(t): i for i, t in enumerate(want)}
    d = config.dimension
    pooled = [MomentAccumulator(d) for _ in want]
    batch_traces: list[np.ndarray] = []

    done = 0
    batch_index = 0
    while done < replicates:
        lanes = min(batch_size, replicates - done)
        rng = substream(seed, "mean-mc", scheme.tag, config.alpha, config.horizon, batch_index)
        local = [MomentAccumulator(d) for _ in want]

        def sink(t: int, y: np.ndarray) -> None:
            i = slot.get(t)
            if i is not None:
                local[i].add_batch(y)

        _step_lanes(config, scheme, rng, lanes, sink)
        traces = np.array([acc.trace_covariance() for acc in local])
        batch_traces.append(traces)
        for acc, part in zip(pooled, local):
            acc.merge(part)
        done += lanes
        batch_index += 1

    stacked = np.vstack(batch_traces)
    n_batches = stacked.shape[0]
    if n_batches >= 2:
        stderr = stacked.std(axis=0, ddof=1) / np.sqrt(n_batches)
    else:
        stderr = np.full(want.size, np.nan)
    return MonteCarloVariance(
        ts=want,
        trace_var=np.array([acc.trace_covariance() for acc in pooled]),
        stderr=stderr,
        mean=np.vstack([acc.mean for acc in pooled]),
        replicates=int(replicates),
        seed=int(seed),
        covariances=(
            np.stack([acc.covariance() for acc in pooled]) if keep_covariances else None
        ),
    )
