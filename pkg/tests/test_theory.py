"""Tests for the closed-form expected sparsity values, the coordinate-count
bounds, and the Monte-Carlo oracles."""

import math

import numpy as np
import pytest

from advsparse.errors import NumericError
from advsparse.rng import STREAM_TRIALS, substream
from advsparse.theory import (
    expected_sparsity_l2,
    expected_sparsity_linf,
    linf_bounds,
    mc_oracle_l2,
    mc_oracle_linf,
)


class TestExpectedSparsityL2:
    """Closed-form expected cap half-angle for k random adversarial
    directions against one random probe direction."""

    def test_single_direction_is_right_angle(self):
        """With k = 1 the expectation is the mean angle between two uniform
        directions, pi/2, in any dimension."""
        for n in (3, 10, 100):
            assert abs(expected_sparsity_l2(n, 1) - math.pi / 2) < 1e-10

    def test_two_directions_in_three_dimensions(self):
        """n=3, k=2 integrates in closed form to 3*pi/8."""
        assert abs(expected_sparsity_l2(3, 2) - 3 * math.pi / 8) < 1e-10

    def test_monotone_in_k(self):
        """More adversarial directions can only shrink the nearest angle."""
        for n in (3, 8):
            vals = [expected_sparsity_l2(n, k) for k in (1, 2, 4, 8, 32)]
            assert all(b < a for a, b in zip(vals, vals[1:]))
            assert all(0.0 < v < math.pi for v in vals)

    def test_large_k_stays_finite(self):
        """Huge k must not overflow the survival powers."""
        v = expected_sparsity_l2(10, 2**40)
        assert 0.0 < v < 1.0

    def test_domain_validation(self):
        """Dimension below 3 and nonpositive k are rejected."""
        with pytest.raises(ValueError):
            expected_sparsity_l2(2, 1)
        with pytest.raises(ValueError):
            expected_sparsity_l2(3, 0)


class TestExpectedSparsityLinf:
    """Closed-form expected free-coordinate count for k random vertices."""

    def test_three_dimensional_value(self):
        """n=3, k=1 sums to 0 + 1/2 + 3/4 + 7/8 = 17/8."""
        assert expected_sparsity_linf(3, 1) == 17.0 / 8.0

    def test_single_vertex_closed_sum(self):
        """k=1 telescopes: sum of 1 - 2**-m equals (n + 1) - (2 - 2**-n)."""
        for n in (3, 10, 24):
            expect = (n + 1) - (2.0 - 2.0 ** (-n))
            assert abs(expected_sparsity_linf(n, 1) - expect) < 1e-12

    def test_frozen_value(self):
        """n=10, k=4 evaluates to the independently summed constant."""
        assert abs(expected_sparsity_linf(10, 4) - 7.499142438421586) < 1e-12

    def test_monotone(self):
        """Decreasing in k, increasing in n."""
        vals_k = [expected_sparsity_linf(10, k) for k in (1, 2, 8, 64)]
        assert all(b < a for a, b in zip(vals_k, vals_k[1:]))
        vals_n = [expected_sparsity_linf(n, 3) for n in (3, 6, 12, 24)]
        assert all(b > a for a, b in zip(vals_n, vals_n[1:]))

    def test_large_k_stays_finite(self):
        """Astronomical k underflows gracefully toward 0."""
        v = expected_sparsity_linf(30, 2**100)
        assert v == 0.0
        v2 = expected_sparsity_linf(100, 2**99)
        assert 0.0 < v2 < 3.0

    def test_domain_validation(self):
        """Dimension below 1 and nonpositive k are rejected."""
        with pytest.raises(ValueError):
            expected_sparsity_linf(0, 1)
        with pytest.raises(ValueError):
            expected_sparsity_linf(3, -1)


class TestLinfBounds:
    """Two-sided envelope for the free-coordinate expectation."""

    def test_frozen_example(self):
        """n=10, k=4: lower (10 - 2)/4 = 2, upper 8 + e/(e-1)."""
        lo, hi = linf_bounds(10, 4)
        assert lo == 2.0
        assert abs(hi - (8.0 + math.e / (math.e - 1.0))) < 1e-12

    def test_contains_closed_form(self):
        """The closed form sits inside the envelope on a (n, k) spot grid."""
        for n in (3, 10, 31, 64):
            k = 1
            while k <= 2 ** (n - 1):
                lo, hi = linf_bounds(n, k)
                assert lo < hi
                assert lo <= expected_sparsity_linf(n, k) <= hi
                k *= 16
        lo, hi = linf_bounds(100, 2**99)
        assert lo <= expected_sparsity_linf(100, 2**99) <= hi

    def test_domain_validation(self):
        """Dimension below 3 is rejected."""
        with pytest.raises(ValueError):
            linf_bounds(2, 1)


class TestMonteCarloOracles:
    """Sampling estimators that cross-check the closed forms without
    sharing any formula with them."""

    def test_l2_oracle_matches_right_angle(self):
        """k=1 oracle mean lands within 4 standard errors of pi/2."""
        mean, se = mc_oracle_l2(6, 1, 40_000, substream(3, STREAM_TRIALS, 0))
        assert se > 0.0
        assert abs(mean - math.pi / 2) <= 4 * se

    def test_linf_oracle_matches_closed_form(self):
        """n=3, k=1 oracle mean lands within 4 standard errors of 17/8."""
        mean, se = mc_oracle_linf(3, 1, 40_000, substream(3, STREAM_TRIALS, 1))
        assert abs(mean - 17.0 / 8.0) <= 4 * se

    def test_determinism(self):
        """The same substream reproduces the same estimate."""
        a = mc_oracle_l2(4, 2, 5000, substream(9, STREAM_TRIALS, 7))
        b = mc_oracle_l2(4, 2, 5000, substream(9, STREAM_TRIALS, 7))
        assert a == b

    def test_stderr_shrinks_with_trials(self):
        """Standard error scales roughly like 1/sqrt(trials)."""
        _, se_small = mc_oracle_linf(5, 2, 4000, substream(1, STREAM_TRIALS, 2))
        _, se_big = mc_oracle_linf(5, 2, 64_000, substream(1, STREAM_TRIALS, 3))
        ratio = se_small / se_big
        assert 2.0 < ratio < 8.0

    def test_trial_validation(self):
        """Too few trials for a standard error are rejected."""
        with pytest.raises(ValueError):
            mc_oracle_l2(3, 1, 1, substream(0, STREAM_TRIALS, 0))
