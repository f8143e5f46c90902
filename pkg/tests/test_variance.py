"""Tests for the closed-form variance factors and their bounds.

Hand-derived oracle values used below (all exact rationals):

  uniform, alpha = 0.5, t = 2:
      v_2 = ((1 + 0.5)/2)^2 * 1 + 1/4 = 9/16 + 4/16 = 13/16
  uniform, alpha = 1, t = 3:
      v_3 = 1 + 1/4 + 1/9 = 49/36
  anchored, alpha = 0.5, t = 2:
      weights (2/3, 1/3); unrolling the data process gives noise
      coefficients (5/6, 1/3), so v_2 = 25/36 + 4/36 = 29/36
  sandwich, alpha = 0.5, t = 4:
      bracket = 1/4 + 1/16 + 4^-1 = 9/16, bounds (9/32, 9/4)
"""

from fractions import Fraction

import numpy as np
import pytest

from contamlab.core import ConfigurationError
from contamlab.variance import (
    CrossoverCertificate,
    anchored_factor_closed,
    anchored_factor_curve,
    anchored_factor_recurrence,
    find_crossover_alpha,
    gamma_ratio,
    uniform_factor_closed,
    uniform_factor_curve,
    uniform_factor_recurrence,
    variance_sandwich,
)

ALPHA_GRID = np.round(np.arange(0.0, 1.01, 0.15), 12).tolist() + [1.0]


class TestFrozenValues:
    def test_uniform_half_at_two(self):
        assert uniform_factor_closed(0.5, 2) == pytest.approx(13 / 16, abs=1e-15)
        assert uniform_factor_recurrence(0.5, 2) == pytest.approx(13 / 16, abs=1e-15)

    def test_uniform_full_contamination_at_three(self):
        assert uniform_factor_closed(1.0, 3) == pytest.approx(49 / 36, abs=1e-15)

    def test_uniform_full_contamination_partial_sum(self):
        # independent route: exact rational arithmetic
        want = float(sum(Fraction(1, k * k) for k in range(1, 11)))
        assert uniform_factor_closed(1.0, 10) == pytest.approx(want, abs=1e-15)

    def test_anchored_half_at_two(self):
        assert anchored_factor_closed(0.5, 2) == pytest.approx(29 / 36, abs=1e-15)
        assert anchored_factor_recurrence(0.5, 2) == pytest.approx(29 / 36, abs=1e-15)

    def test_round_one_is_unit_variance(self):
        for alpha in (0.0, 0.3, 1.0):
            assert uniform_factor_closed(alpha, 1) == 1.0
            assert anchored_factor_closed(alpha, 1) == 1.0

    def test_sandwich_example(self):
        lo, hi = variance_sandwich(0.5, 4)
        assert lo == pytest.approx(9 / 32, abs=1e-15)
        assert hi == pytest.approx(9 / 4, abs=1e-15)


class TestClosedFormAgainstRecurrence:
    """The log-gamma closed form and the recurrence are independent routes."""

    @pytest.mark.parametrize("alpha", ALPHA_GRID)
    def test_uniform_identity(self, alpha):
        curve = uniform_factor_curve(alpha, 300)
        for t in (1, 2, 3, 7, 50, 299, 300):
            rec = uniform_factor_recurrence(alpha, t)
            assert curve[t - 1] == pytest.approx(rec, rel=1e-10)

    @pytest.mark.parametrize("alpha", ALPHA_GRID)
    def test_anchored_identity(self, alpha):
        curve = anchored_factor_curve(alpha, 300)
        for t in (1, 2, 3, 7, 50, 299, 300):
            rec = anchored_factor_recurrence(alpha, t)
            assert curve[t - 1] == pytest.approx(rec, rel=1e-10)

    def test_scalar_matches_curve(self):
        curve = uniform_factor_curve(0.4, 20)
        assert uniform_factor_closed(0.4, 20) == curve[-1]
        curve = anchored_factor_curve(0.4, 20)
        assert anchored_factor_closed(0.4, 20) == curve[-1]


class TestEdgeAlphas:
    def test_uniform_clean_is_one_over_t(self):
        ts = np.arange(1, 201)
        np.testing.assert_allclose(uniform_factor_curve(0.0, 200), 1.0 / ts, atol=1e-15)

    def test_anchored_clean_is_one_over_t(self):
        ts = np.arange(1, 201)
        np.testing.assert_allclose(anchored_factor_curve(0.0, 200), 1.0 / ts, atol=1e-15)

    def test_anchored_full_contamination_is_flat(self):
        np.testing.assert_array_equal(anchored_factor_curve(1.0, 100), np.ones(100))

    def test_uniform_factor_increases_with_alpha(self):
        """More contamination never reduces the pooled-estimate variance."""
        for t in (2, 5, 30, 200):
            factors = [uniform_factor_closed(a, t) for a in np.arange(0.0, 1.01, 0.1)]
            assert all(b > a for a, b in zip(factors, factors[1:]))


class TestGammaRatio:
    def test_two_sided_bound(self):
        """z^(1-lam) <= Gamma(z+1)/Gamma(z+lam) <= (z+1)^(1-lam) on (0,1)."""
        for z in (0.5, 1.0, 2.0, 10.0, 100.0, 1000.0):
            for lam in (0.1, 0.5, 0.9):
                r = gamma_ratio(z, lam)
                assert z ** (1.0 - lam) <= r <= (z + 1.0) ** (1.0 - lam)

    def test_integer_check(self):
        # Gamma(4)/Gamma(3) = 3 exactly
        assert gamma_ratio(3.0, 0.0) == pytest.approx(3.0, rel=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(ConfigurationError):
            gamma_ratio(0.0, 0.5)


class TestSandwich:
    def test_contains_closed_form(self):
        for alpha in np.arange(0.1, 0.95, 0.1):
            curve = uniform_factor_curve(alpha, 400)
            for t in range(3, 401, 7):
                lo, hi = variance_sandwich(alpha, t)
                assert lo <= curve[t - 1] <= hi

    def test_fixed_width_ratio(self):
        for alpha, t in ((0.2, 3), (0.5, 100), (0.9, 17)):
            lo, hi = variance_sandwich(alpha, t)
            assert hi / lo == pytest.approx(8.0, rel=1e-12)

    def test_domain(self):
        with pytest.raises(ConfigurationError):
            variance_sandwich(0.5, 2)
        with pytest.raises(ConfigurationError):
            variance_sandwich(0.0, 10)
        with pytest.raises(ConfigurationError):
            variance_sandwich(1.0, 10)


class TestCrossover:
    def test_frozen_value_at_ten_rounds(self):
        cert = find_crossover_alpha(10, 0.01)
        assert cert.alpha_star == pytest.approx(0.73, abs=1e-12)

    def test_certificate_reverifies(self):
        cert = find_crossover_alpha(10, 0.01)
        assert cert.verify()
        assert 0.0 < cert.alpha_star < 1.0

    def test_coarse_grid_agrees(self):
        cert = find_crossover_alpha(10, 0.05)
        assert cert.verify()
        assert abs(cert.alpha_star - 0.73) <= 0.05

    def test_tampered_certificate_fails(self):
        cert = find_crossover_alpha(10, 0.01)
        forged = CrossoverCertificate(
            t=cert.t,
            grid_step=cert.grid_step,
            alphas=cert.alphas,
            uniform_factors=cert.uniform_factors,
            anchored_factors=cert.anchored_factors,
            alpha_star=max(0.0, cert.alpha_star - 0.05),
        )
        assert not forged.verify()

    def test_rejects_uneven_step(self):
        with pytest.raises(ConfigurationError):
            find_crossover_alpha(10, 0.03)
        with pytest.raises(ConfigurationError):
            find_crossover_alpha(10, 0.7)


class TestDomainChecks:
    def test_alpha_bounds(self):
        for bad in (-0.1, 1.1, float("nan")):
            with pytest.raises(ConfigurationError):
                uniform_factor_closed(bad, 5)
            with pytest.raises(ConfigurationError):
                anchored_factor_closed(bad, 5)

    def test_t_bounds(self):
        for bad in (0, -3):
            with pytest.raises(ConfigurationError):
                uniform_factor_curve(0.5, bad)
            with pytest.raises(ConfigurationError):
                anchored_factor_recurrence(0.5, bad)
