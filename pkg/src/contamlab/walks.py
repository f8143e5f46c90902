"""Monte Carlo estimation of the survival constant of an upward-biased walk.

The walk starts at 0 and steps +1 with probability alpha, else -1.  The
quantity of interest is the probability that the walk stays at or above 1
for every step up to a truncation horizon; for alpha > 1/2 this converges
to the positive constant 2*alpha - 1 as the horizon grows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigurationError, substream

__all__ = ["walk_stays_positive", "WalkEstimate", "estimate_stall_constant"]

_Z95 = 1.959963984540054  # two-sided 95% normal quantile


def _check_walk_params(alpha: float, truncation: int) -> tuple[float, int]:
    alpha = float(alpha)
    if not (0.0 <= alpha <= 1.0):
        raise ConfigurationError(f"alpha must lie in [0, 1], got {alpha}")
    if int(truncation) != truncation or truncation < 1:
        raise ConfigurationError(f"truncation must be an integer >= 1, got {truncation}")
    return alpha, int(truncation)


def walk_stays_positive(alpha: float, truncation: int, rng: np.random.Generator) -> bool:
    """Simulate one walk; True when every prefix position is >= 1."""
    alpha, truncation = _check_walk_params(alpha, truncation)
    pos = 0
    remaining = truncation
    while remaining > 0:
        block = min(remaining, 4096)
        steps = np.where(rng.random(block) < alpha, 1, -1)
        path = pos + np.cumsum(steps)
        if path.min() < 1:
            return False
        pos = int(path[-1])
        remaining -= block
    return True


@dataclass(frozen=True)
class WalkEstimate:
    """Survival frequency with a 95% normal confidence half-width."""

    alpha: float
    truncation: int
    replicates: int
    estimate: float
    ci_halfwidth: float


def _bernoulli_block(
    rng: np.random.Generator, alpha: float, shape: tuple[int, int]
) -> np.ndarray:
    """Exact Bernoulli(alpha) draws from 32-bit integers.

    A value strictly below floor(alpha * 2^32) is a success and one strictly
    above is a failure; the single boundary value falls back to a float
    draw carrying the fractional remainder, so the success probability is
    exactly the double alpha while consuming half the generator output of
    plain float sampling.
    """
    if alpha in (0.0, 1.0):
        return np.full(shape, bool(alpha))
    scaled = alpha * 4294967296.0
    threshold = int(scaled)
    words = rng.integers(0, 4294967296, size=shape, dtype=np.uint32)
    up = words < np.uint32(threshold)
    boundary = words == np.uint32(threshold)
    if boundary.any():
        hits = int(boundary.sum())
        up[boundary] = rng.random(hits) < (scaled - threshold)
    return up


def estimate_stall_constant(
    alpha: float,
    truncation: int,
    replicates: int,
    seed: int,
    max_chunk_elements: int = 16_000_000,
) -> WalkEstimate:
    """Estimate the survival probability over many walks, vectorized.

    Walks advance in lockstep over step blocks; a walk is discarded as soon
    as any prefix of its path dips below 1, so late blocks only simulate
    survivors.  Block sizes adapt to the number of live walks but are a
    deterministic function of the draw sequence, keeping results exactly
    reproducible for a given seed.
    """
    alpha, truncation = _check_walk_params(alpha, truncation)
    if replicates < 1:
        raise ConfigurationError(f"replicates must be >= 1, got {replicates}")
    rng = substream(seed, "walk", alpha, truncation, replicates)
    positions = np.zeros(replicates, dtype=np.int32)
    steps_done = 0
    while steps_done < truncation and positions.size > 0:
        block = max(64, min(truncation - steps_done, max_chunk_elements // positions.size))
        block = min(block, truncation - steps_done)
        up = _bernoulli_block(rng, alpha, (positions.size, block))
        steps = (up.astype(np.int8) << 1) - np.int8(1)
        path = np.cumsum(steps, axis=1, dtype=np.int32)
        path += positions[:, None]
        alive = path.min(axis=1) >= 1
        positions = path[alive, -1]
        steps_done += block
    p_hat = positions.size / replicates
    half = _Z95 * np.sqrt(p_hat * (1.0 - p_hat) / replicates)
    return WalkEstimate(
        alpha=alpha,
        truncation=truncation,
        replicates=int(replicates),
        estimate=float(p_hat),
        ci_halfwidth=float(half),
    )
