"""Exact variance factors for pooled mean estimators on self-contaminated data.

The data process starts from one clean draw and thereafter mixes a fraction
``alpha`` of the previous round's estimate into every new observation.  For a
simplex weighting over rounds, the estimator variance is the base noise
covariance times a scalar factor depending only on (alpha, t).  This module
computes those factors two independent ways (closed form via log-gamma, and a
one-step recurrence), provides the two-sided order bound on the uniform
factor, and locates the weighting crossover point.

All factors are dimensionless: multiply by trace(sigma) for a d-dimensional
noise covariance sigma.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .core import ConfigurationError

__all__ = [
    "uniform_factor_closed",
    "uniform_factor_recurrence",
    "uniform_factor_curve",
    "anchored_factor_closed",
    "anchored_factor_recurrence",
    "anchored_factor_curve",
    "variance_sandwich",
    "gamma_ratio",
    "CrossoverCertificate",
    "find_crossover_alpha",
]


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 <= alpha <= 1.0) or not np.isfinite(alpha):
        raise ConfigurationError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha


def _check_t(t: int) -> int:
    if int(t) != t or t < 1:
        raise ConfigurationError(f"t must be an integer >= 1, got {t}")
    return int(t)


def gamma_ratio(z: float, lam: float) -> float:
    """Gamma(z + 1) / Gamma(z + lam), computed stably in log space."""
    if z <= 0:
        raise ConfigurationError(f"z must be positive, got {z}")
    return float(np.exp(gammaln(z + 1.0) - gammaln(z + lam)))


# ---------------------------------------------------------------------------
# Uniform weighting: equal weight on every round seen so far
# ---------------------------------------------------------------------------


def uniform_factor_curve(alpha: float, t_max: int) -> np.ndarray:
    """Closed-form uniform-weighting factors for every t in 1..t_max.

    The contamination-free and fully-contaminated endpoints use their exact
    elementary forms (1/t and the partial sum of 1/k^2); interior alpha uses
    the log-gamma product representation.
    """
    alpha = _check_alpha(alpha)
    t_max = _check_t(t_max)
    ts = np.arange(1, t_max + 1, dtype=float)
    if alpha == 0.0:
        return 1.0 / ts
    if alpha == 1.0:
        return np.cumsum(1.0 / ts**2)
    # F_t = 1/t^2 + (Gamma(t+a)/Gamma(t+1))^2 * sum_{k<t} (Gamma(k+1)/(k Gamma(k+a)))^2
    log_terms = 2.0 * (gammaln(ts + 1.0) - np.log(ts) - gammaln(ts + alpha))
    tail_sums = np.concatenate(([0.0], np.cumsum(np.exp(log_terms))[:-1]))
    prefix = np.exp(2.0 * (gammaln(ts + alpha) - gammaln(ts + 1.0)))
    return 1.0 / ts**2 + prefix * tail_sums


def uniform_factor_closed(alpha: float, t: int) -> float:
    """Closed-form variance factor of the uniformly weighted estimate at round t."""
    return float(uniform_factor_curve(alpha, t)[-1])


def uniform_factor_recurrence(alpha: float, t: int) -> float:
    """Same factor via the one-step recurrence; independent of the closed form."""
    alpha = _check_alpha(alpha)
    t = _check_t(t)
    v = 1.0
    for i in range(2, t + 1):
        v = ((i - 1.0 + alpha) / i) ** 2 * v + 1.0 / i**2
    return v


# ---------------------------------------------------------------------------
# Anchored weighting: extra weight pinned on the clean first round
# ---------------------------------------------------------------------------


def _anchor_gammas(alpha: float, t_max: int) -> np.ndarray:
    """Normalizers g_t = 1 + (t - 1)(1 - alpha) for t = 1..t_max."""
    return 1.0 + (np.arange(1, t_max + 1, dtype=float) - 1.0) * (1.0 - alpha)


def anchored_factor_curve(alpha: float, t_max: int) -> np.ndarray:
    """Closed-form anchored-weighting factors for every t in 1..t_max.

    At alpha = 0 the scheme degenerates to uniform weighting (1/t); at
    alpha = 1 all weight stays on the single clean round, so the factor
    is identically 1.
    """
    alpha = _check_alpha(alpha)
    t_max = _check_t(t_max)
    ts = np.arange(1, t_max + 1, dtype=float)
    if alpha == 0.0:
        return 1.0 / ts
    if alpha == 1.0:
        return np.ones(t_max)
    out = np.ones(t_max)
    if t_max == 1:
        return out
    g = _anchor_gammas(alpha, t_max)
    # log of the round-to-round shrink products C_l, l = 1..t_max-1
    log_c = np.cumsum(np.log((g[:-1] + alpha * (1.0 - alpha)) / g[1:]))
    fresh = ((1.0 - alpha) / g) ** 2
    # cumulative sum over k = 2..t-1 of fresh_k / C_{k-1}^2
    inner = fresh[1:-1] * np.exp(-2.0 * log_c[:-1]) if t_max >= 3 else np.array([])
    inner_sums = np.concatenate(([0.0], np.cumsum(inner)))
    carried = np.exp(2.0 * log_c)
    out[1:] = fresh[1:] + carried * (1.0 + inner_sums)
    return out


def anchored_factor_closed(alpha: float, t: int) -> float:
    """Closed-form variance factor of the anchored estimate at round t."""
    return float(anchored_factor_curve(alpha, t)[-1])


def anchored_factor_recurrence(alpha: float, t: int) -> float:
    """Anchored factor via its one-step recurrence."""
    alpha = _check_alpha(alpha)
    t = _check_t(t)
    if alpha == 0.0:
        return 1.0 / t
    v = 1.0
    g_prev = 1.0
    for i in range(2, t + 1):
        g_cur = 1.0 + (i - 1.0) * (1.0 - alpha)
        v = ((g_prev + alpha * (1.0 - alpha)) / g_cur) ** 2 * v + ((1.0 - alpha) / g_cur) ** 2
        g_prev = g_cur
    return v


# ---------------------------------------------------------------------------
# Two-sided order bound for the uniform factor
# ---------------------------------------------------------------------------


def variance_sandwich(alpha: float, t: int) -> tuple[float, float]:
    """Lower and upper bounds on the uniform factor, valid for t >= 3.

    The bracket is B = 1/t + 1/t^2 + t^(-2(1-alpha)); the bound pair is
    (B/2, 4B), an 8x-wide envelope capturing the rate for interior alpha.
    """
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise ConfigurationError(f"sandwich requires 0 < alpha < 1, got {alpha}")
    t = _check_t(t)
    if t < 3:
        raise ConfigurationError(f"sandwich requires t >= 3, got {t}")
    bracket = 1.0 / t + 1.0 / t**2 + float(t) ** (-2.0 * (1.0 - alpha))
    return 0.5 * bracket, 4.0 * bracket


# ---------------------------------------------------------------------------
# Weighting crossover
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CrossoverCertificate:
    """Grid evidence for a crossover decision at a fixed round count.

    alpha_star is the smallest grid point from which the anchored factor
    stays strictly below the uniform factor through alpha = 1, or 1.0 when
    no such point exists below 1.
    """

    t: int
    grid_step: float
    alphas: np.ndarray
    uniform_factors: np.ndarray
    anchored_factors: np.ndarray
    alpha_star: float

    def verify(self) -> bool:
        """Recheck the defining property directly from the stored grid."""
        below = self.anchored_factors < self.uniform_factors
        if self.alpha_star == 1.0 and not below[-1]:
            return True  # no crossover below 1 exists
        idx = int(np.searchsorted(self.alphas, self.alpha_star))
        if idx >= len(self.alphas) or abs(self.alphas[idx] - self.alpha_star) > 1e-9:
            return False
        if not bool(below[idx:].all()):
            return False
        # minimality: the previous grid point must break the property
        return idx == 0 or not bool(below[idx - 1 :].all())


def find_crossover_alpha(t: int, grid_step: float = 0.01) -> CrossoverCertificate:
    """Scan an alpha grid for the point past which anchoring wins at round t."""
    t = _check_t(t)
    if not (0.0 < grid_step <= 0.5):
        raise ConfigurationError(f"grid_step must lie in (0, 0.5], got {grid_step}")
    n_steps = int(round(1.0 / grid_step))
    if abs(n_steps * grid_step - 1.0) > 1e-9:
        raise ConfigurationError(f"grid_step must divide 1 evenly, got {grid_step}")
    alphas = np.round(np.arange(n_steps + 1) * grid_step, 12)
    uni = np.array([uniform_factor_closed(a, t) for a in alphas])
    anc = np.array([anchored_factor_closed(a, t) for a in alphas])
    below = anc < uni
    # smallest index whose suffix is all True
    suffix_all = np.logical_and.accumulate(below[::-1])[::-1]
    hits = np.nonzero(suffix_all)[0]
    alpha_star = float(alphas[hits[0]]) if hits.size else 1.0
    return CrossoverCertificate(
        t=t,
        grid_step=float(grid_step),
        alphas=alphas,
        uniform_factors=uni,
        anchored_factors=anc,
        alpha_star=alpha_star,
    )
