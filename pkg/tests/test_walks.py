"""Tests for the upward-biased walk survival estimator.

Exact short-horizon survival probabilities, used as oracles below (walk
starts at 0; survival means every prefix position >= 1):

  T = 1: first step must go up                     -> alpha
  T = 2: from 1 a down-step hits 0                 -> alpha^2
  T = 3: from 2 both continuations stay >= 1       -> alpha^2
  T = 4: from 2 only the down-down branch dies     -> alpha^3 * (2 - alpha)

The infinite-horizon limit for alpha > 1/2 is 2*alpha - 1: the first step
must go up (alpha), then the walk at 1 must never hit 0 (1 - (1-alpha)/alpha).
"""

import numpy as np
import pytest

from contamlab.core import ConfigurationError, substream
from contamlab.walks import estimate_stall_constant, walk_stays_positive


def exact_survival(alpha, truncation):
    if truncation == 1:
        return alpha
    if truncation in (2, 3):
        return alpha**2
    if truncation == 4:
        return alpha**3 * (2.0 - alpha)
    raise ValueError(truncation)


class TestShortHorizonOracles:
    @pytest.mark.parametrize("alpha", [0.55, 0.7, 0.9])
    @pytest.mark.parametrize("truncation", [1, 2, 3, 4])
    def test_vectorized_estimator(self, alpha, truncation):
        est = estimate_stall_constant(alpha, truncation, replicates=40_000, seed=101)
        want = exact_survival(alpha, truncation)
        se = np.sqrt(want * (1.0 - want) / est.replicates)
        assert abs(est.estimate - want) <= 5.0 * se + 1e-12

    def test_scalar_reference(self):
        rng = substream(55, "walk-ref")
        hits = sum(walk_stays_positive(0.7, 4, rng) for _ in range(3_000))
        want = exact_survival(0.7, 4)
        se = np.sqrt(want * (1.0 - want) / 3_000)
        assert abs(hits / 3_000 - want) <= 5.0 * se


class TestTwoRoutesAgree:
    def test_scalar_vs_vectorized_midsize(self):
        """Both samplers target the same survival probability at T = 200."""
        alpha, truncation = 0.7, 200
        rng = substream(56, "walk-ref-mid")
        n_ref = 1_500
        p_ref = sum(walk_stays_positive(alpha, truncation, rng) for _ in range(n_ref)) / n_ref
        est = estimate_stall_constant(alpha, truncation, replicates=30_000, seed=77)
        pooled_se = np.sqrt(
            p_ref * (1 - p_ref) / n_ref
            + est.estimate * (1 - est.estimate) / est.replicates
        )
        assert abs(p_ref - est.estimate) <= 4.0 * pooled_se


class TestLimitBehavior:
    def test_approaches_limit_constant(self):
        est = estimate_stall_constant(0.75, truncation=20_000, replicates=20_000, seed=5)
        assert abs(est.estimate - 0.5) <= 0.02
        assert est.ci_halfwidth > 0.0
        assert est.estimate - est.ci_halfwidth > 0.0

    def test_monotone_in_alpha(self):
        ests = [
            estimate_stall_constant(a, truncation=5_000, replicates=20_000, seed=8).estimate
            for a in (0.6, 0.75, 0.9)
        ]
        assert ests[0] < ests[1] < ests[2]

    def test_truncation_insensitive_past_mixing(self):
        """Past the transient, longer horizons change nothing but noise."""
        short = estimate_stall_constant(0.6, truncation=20_000, replicates=20_000, seed=13)
        long = estimate_stall_constant(0.6, truncation=100_000, replicates=20_000, seed=14)
        assert abs(short.estimate - long.estimate) <= 0.015

    def test_unbiased_walk_rarely_survives(self):
        est = estimate_stall_constant(0.5, truncation=10_000, replicates=10_000, seed=2)
        assert est.estimate <= 0.02


class TestDegenerateAlphas:
    def test_always_down_never_survives(self):
        est = estimate_stall_constant(0.0, truncation=10, replicates=1_000, seed=1)
        assert est.estimate == 0.0
        assert est.ci_halfwidth == 0.0

    def test_always_up_always_survives(self):
        est = estimate_stall_constant(1.0, truncation=10, replicates=1_000, seed=1)
        assert est.estimate == 1.0


class TestReproducibility:
    def test_same_seed_same_estimate(self):
        a = estimate_stall_constant(0.65, truncation=500, replicates=5_000, seed=33)
        b = estimate_stall_constant(0.65, truncation=500, replicates=5_000, seed=33)
        assert a == b

    def test_different_seeds_differ(self):
        a = estimate_stall_constant(0.65, truncation=500, replicates=5_000, seed=33)
        b = estimate_stall_constant(0.65, truncation=500, replicates=5_000, seed=34)
        assert a.estimate != b.estimate


class TestDomain:
    def test_parameter_checks(self):
        rng = substream(0, "x")
        with pytest.raises(ConfigurationError):
            walk_stays_positive(1.2, 10, rng)
        with pytest.raises(ConfigurationError):
            walk_stays_positive(0.5, 0, rng)
        with pytest.raises(ConfigurationError):
            estimate_stall_constant(0.5, 10, replicates=0, seed=1)
        with pytest.raises(ConfigurationError):
            estimate_stall_constant(-0.1, 10, replicates=10, seed=1)
