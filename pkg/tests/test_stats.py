"""Tests for the in-repo statistical kernel."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cswitch import stats
from oracles import (kde_pointwise, rank_sum_p_enumerated,
                     signed_rank_p_enumerated)


class TestRankSum:
    def test_most_extreme_separation(self):
        # 20 orderings of 3+3, the observed one is the most extreme of them
        res = stats.wilcoxon_rank_sum([1, 2, 3], [4, 5, 6])
        assert res.p_value == 0.1
        assert res.mode == "exact"

    def test_identical_samples(self):
        a = [1.0, 2.0, 3.0, 4.0]
        res = stats.wilcoxon_rank_sum(a, list(a))
        assert res.statistic == len(a) * len(a) / 2
        assert res.p_value == 1.0

    def test_symmetry(self):
        rng = np.random.default_rng(7)
        a = rng.integers(0, 6, size=7).tolist()
        b = rng.integers(0, 6, size=9).tolist()
        assert (stats.wilcoxon_rank_sum(a, b).p_value
                == stats.wilcoxon_rank_sum(b, a).p_value)

    @pytest.mark.parametrize("n1,n2", [(2, 3), (4, 4), (5, 7), (3, 9), (8, 8), (10, 10)])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_exact_matches_enumeration(self, n1, n2, seed):
        rng = np.random.default_rng(seed)
        # small integer range so ties actually occur
        a = rng.integers(0, 5, size=n1).tolist()
        b = rng.integers(0, 5, size=n2).tolist()
        res = stats.wilcoxon_rank_sum(a, b)
        assert res.mode == "exact"
        assert_allclose(res.p_value, rank_sum_p_enumerated(a, b), rtol=0, atol=1e-12)

    @pytest.mark.parametrize("seed", range(6))
    def test_approx_near_exact_at_boundary(self, seed):
        rng = np.random.default_rng(100 + seed)
        a = rng.normal(0.0, 1.0, size=10).tolist()
        b = rng.normal(0.4, 1.0, size=10).tolist()
        exact = stats.wilcoxon_rank_sum(a, b, method="exact")
        approx = stats.wilcoxon_rank_sum(a, b, method="approx")
        assert approx.mode == "normal_approx"
        assert abs(exact.p_value - approx.p_value) < 0.02

    def test_auto_mode_threshold(self):
        small = stats.wilcoxon_rank_sum(list(range(10)), list(range(10, 20)))
        big = stats.wilcoxon_rank_sum(list(range(10)), list(range(10, 21)))
        assert small.mode == "exact"
        assert big.mode == "normal_approx"

    def test_degenerate_all_tied(self):
        res = stats.wilcoxon_rank_sum([3, 3, 3], [3, 3, 3, 3])
        assert res.degenerate
        assert res.p_value == 1.0
        assert res.z == 0.0

    def test_p_value_positive(self):
        a = list(range(30))
        b = [x + 50 for x in range(30)]
        res = stats.wilcoxon_rank_sum(a, b)
        assert 0.0 < res.p_value <= 1.0

    def test_empty_sample_rejected(self):
        with pytest.raises(ValueError):
            stats.wilcoxon_rank_sum([], [1.0])

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            stats.wilcoxon_rank_sum([1], [2], method="bogus")


class TestSignedRank:
    def test_six_positive_pairs(self):
        # all six differences positive: 2 * (1/2)^6 exactly
        res = stats.wilcoxon_signed_rank([1.0, 2.0, 0.5, 3.0, 1.5, 2.5])
        assert res.p_value == 0.03125
        assert res.mode == "exact"

    def test_paired_form_equals_diff_form(self):
        x = [5.0, 3.0, 4.0, 6.0]
        y = [4.0, 3.5, 1.0, 6.5]
        d = [xi - yi for xi, yi in zip(x, y)]
        assert (stats.wilcoxon_signed_rank(x, y).p_value
                == stats.wilcoxon_signed_rank(d).p_value)

    def test_zeros_dropped_and_tallied(self):
        res = stats.wilcoxon_signed_rank([0.0, 1.0, -2.0, 0.0, 3.0])
        assert res.zeros_dropped == 2
        assert res.n == 5

    def test_all_zero_degenerate(self):
        res = stats.wilcoxon_signed_rank([0.0, 0.0, 0.0])
        assert res.degenerate
        assert res.p_value == 1.0

    @pytest.mark.parametrize("n", [3, 6, 10, 14])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_exact_matches_enumeration(self, n, seed):
        rng = np.random.default_rng(seed)
        d = (rng.integers(-4, 5, size=n)).astype(float).tolist()
        if all(v == 0 for v in d):
            d[0] = 1.0
        res = stats.wilcoxon_signed_rank(d)
        assert res.mode == "exact"
        assert_allclose(res.p_value, signed_rank_p_enumerated(d), rtol=0, atol=1e-12)

    def test_effect_size_uses_pair_count(self):
        d = [0.0, 1.0, 2.0, -1.0, 3.0, 1.0, 0.0, 2.0]
        res = stats.wilcoxon_signed_rank(d)
        assert_allclose(res.effect_size_r, abs(res.z) / math.sqrt(len(d)))

    def test_large_n_switches_to_normal(self):
        rng = np.random.default_rng(3)
        d = rng.normal(0.3, 1.0, size=40).tolist()
        res = stats.wilcoxon_signed_rank(d)
        assert res.mode == "normal_approx"
        assert 0.0 < res.p_value <= 1.0

    def test_mismatched_pairs_rejected(self):
        with pytest.raises(ValueError):
            stats.wilcoxon_signed_rank([1.0, 2.0], [1.0])


class TestKde:
    def test_matches_direct_evaluation(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=40)
        grid, dens, h = stats.kde_gaussian(x)
        assert_allclose(dens, kde_pointwise(x, grid, h), rtol=0, atol=1e-12)

    def test_density_integrates_to_one(self):
        rng = np.random.default_rng(12)
        x = rng.normal(size=200)
        grid, dens, h = stats.kde_gaussian(x, grid=np.linspace(-8, 8, 2001))
        assert abs(np.trapezoid(dens, grid) - 1.0) < 1e-3

    def test_silverman_bandwidth(self):
        x = np.array([1.0, 2.0, 2.5, 3.0, 4.0, 6.0, 7.5, 9.0])
        _, _, h = stats.kde_gaussian(x)
        sd = np.std(x, ddof=1)
        iqr = np.percentile(x, 75) - np.percentile(x, 25)
        assert_allclose(h, 0.9 * min(sd, iqr / 1.34) * len(x) ** -0.2)

    def test_zero_variance_raises_with_hint(self):
        with pytest.raises(ValueError, match="bandwidth"):
            stats.kde_gaussian([2.0, 2.0, 2.0])

    def test_zero_iqr_falls_back_to_sd(self):
        x = [5.0] * 7 + [9.0]
        _, _, h = stats.kde_gaussian(x)
        assert h > 0.0

    def test_explicit_bandwidth_respected(self):
        _, _, h = stats.kde_gaussian([1.0, 2.0, 3.0], bandwidth=0.7)
        assert h == 0.7


class TestSummarize:
    def test_known_values(self):
        s = stats.summarize([1.0, 2.0, 3.0, 4.0])
        assert s.mean == 2.5
        assert_allclose(s.sd, math.sqrt(5.0 / 3.0))
        assert_allclose(s.se, math.sqrt(5.0 / 3.0) / 2.0)

    def test_single_observation_flagged(self):
        s = stats.summarize([4.2])
        assert s.n == 1 and s.sd is None and s.se is None

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            stats.summarize([])
