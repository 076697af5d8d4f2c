import math

import numpy as np
import pytest

from multigini import (
    DataError,
    MomentSummary,
    NumericalError,
    WeightedSample,
    brute_force_gini_1d,
    brute_force_gini_p,
    fit_whitening,
    fit_zca,
    gaussian_g1_closed_form,
    gen_coinflip_cube,
    gen_gaussian,
    gen_spike_cube,
    gini_1d,
    gini_1_decomposed,
    gini_p,
    mahalanobis_norm_p,
    moments,
)


def random_nonneg_sample(rng, d, n, weighted=False):
    points = rng.lognormal(mean=rng.normal(0.0, 0.5, d), sigma=0.6, size=(n, d))
    weights = rng.random(n) + 0.05 if weighted else None
    return WeightedSample(points, weights)


def white_product_sample(shifts):
    """Exact product of unit-variance coin flips with per-component shifts.

    Covariance is exactly the identity while the component means differ,
    so the fitted whitening is the identity matrix.
    """
    d = len(shifts)
    masks = (np.arange(2**d)[:, None] >> np.arange(d)) & 1
    points = np.where(masks == 1, 2.0, 0.0) + np.asarray(shifts, dtype=float)
    return WeightedSample(points)


class TestGini1d:
    def test_point_mass_is_zero(self):
        assert gini_1d([3.0, 3.0, 3.0], [0.2, 0.5, 0.3]) == 0.0

    def test_rare_spike(self):
        p = 0.25
        high = 1.0 / (math.sqrt(p) * (1.0 - p))
        assert gini_1d([0.0, high], [1.0 - p, p]) == pytest.approx(0.75, abs=1e-15)

    def test_fair_coin(self):
        # E|X-Y| = 1 and mean = 1, so the index is 1/2
        assert gini_1d([0.0, 2.0], [0.5, 0.5]) == pytest.approx(0.5, abs=1e-15)

    def test_uniform_weights_default(self):
        values = [1.0, 2.0, 7.0]
        assert gini_1d(values) == gini_1d(values, [1.0, 1.0, 1.0])

    def test_matches_double_sum_reference(self):
        rng = np.random.default_rng(31)
        for trial in range(30):
            n = int(rng.integers(2, 300))
            values = rng.lognormal(0.0, 1.0, n)
            weights = rng.random(n) + 0.01 if trial % 2 else None
            fast = gini_1d(values, weights)
            slow = brute_force_gini_1d(values, weights)
            assert abs(fast - slow) <= 1e-10 * max(1.0, slow)

    def test_ties_any_order(self):
        values = [1.0, 1.0, 1.0, 4.0, 4.0]
        weights = [0.1, 0.3, 0.1, 0.25, 0.25]
        assert gini_1d(values, weights) == pytest.approx(
            brute_force_gini_1d(values, weights), abs=1e-14
        )

    def test_zero_mean_rejected(self):
        with pytest.raises(NumericalError, match="zero-mean"):
            gini_1d([-1.0, 1.0], [0.5, 0.5])

    def test_negative_values_allowed_when_mean_nonzero(self):
        value = gini_1d([-1.0, 3.0], [0.5, 0.5])
        assert value == pytest.approx(4.0 / (2.0 * 2.0 * 1.0), abs=1e-15)

    def test_bad_weights(self):
        with pytest.raises(DataError):
            gini_1d([1.0, 2.0], [0.5, -0.1])
        with pytest.raises(DataError):
            gini_1d([1.0, 2.0], [0.0, 0.0])


class TestMahalanobisNorm:
    def test_euclidean(self):
        m = MomentSummary.from_mean_cov([0.0, 0.0], np.eye(2))
        t = fit_zca(m)
        assert mahalanobis_norm_p(t, [3.0, 4.0], 2.0) == pytest.approx(5.0, abs=1e-12)

    def test_l1(self):
        m = MomentSummary.from_mean_cov([0.0] * 3, np.eye(3))
        t = fit_zca(m)
        assert mahalanobis_norm_p(t, [1.0, -2.0, 3.0], 1.0) == pytest.approx(6.0, abs=1e-12)

    def test_max_norm(self):
        m = MomentSummary.from_mean_cov([0.0] * 3, np.eye(3))
        t = fit_zca(m)
        assert mahalanobis_norm_p(t, [1.0, -2.0, 0.5], math.inf) == pytest.approx(2.0, abs=1e-12)

    def test_p2_agrees_across_methods(self):
        rng = np.random.default_rng(32)
        a = rng.standard_normal((3, 3))
        m = MomentSummary.from_mean_cov(rng.uniform(-2, 2, 3), a @ a.T + 0.3 * np.eye(3))
        values = [
            mahalanobis_norm_p(fit_whitening(method, m), m.mean, 2.0)
            for method in ("zca", "pca", "cholesky", "zca_cor")
        ]
        assert max(values) - min(values) <= 1e-9 * max(values)

    def test_p_below_one_rejected(self):
        m = MomentSummary.from_mean_cov([0.0], [[1.0]])
        with pytest.raises(DataError, match="p must be"):
            mahalanobis_norm_p(fit_zca(m), [1.0], 0.5)


class TestGiniP:
    @pytest.mark.parametrize("p", [1.0, 2.0, math.inf])
    def test_one_dimensional_reduces_to_gini_1d(self, p):
        prob = 0.3
        sample = gen_spike_cube(prob, 1)
        result = gini_p(sample, p)
        assert result.value == pytest.approx(1.0 - prob, abs=1e-12)

    def test_white_sample_is_mean_weighted_combination(self):
        sample = white_product_sample([0.0, 3.0, 1.0])
        means = moments(sample).mean
        per_component = np.array(
            [gini_1d(sample.points[:, j], sample.weights) for j in range(3)]
        )
        expected = float((means / means.sum()) @ per_component)
        assert gini_p(sample, 1.0).value == pytest.approx(expected, abs=1e-12)

    def test_exact_matches_brute_force(self):
        rng = np.random.default_rng(33)
        for p in (1.0, 1.5, 2.0, math.inf):
            sample = random_nonneg_sample(rng, 3, 80, weighted=True)
            transform = fit_whitening("zca_cor", moments(sample))
            assert gini_p(sample, p).value == pytest.approx(
                brute_force_gini_p(sample, p, transform), abs=1e-12
            )

    def test_decomposition_identity(self):
        rng = np.random.default_rng(34)
        for trial in range(10):
            d = int(rng.integers(1, 6))
            sample = random_nonneg_sample(rng, d, int(rng.integers(d + 2, 150)), trial % 2 == 0)
            direct = gini_p(sample, 1.0).value
            decomposed = gini_1_decomposed(sample).value
            assert abs(direct - decomposed) <= 1e-10

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0, math.inf])
    def test_scale_invariance(self, p):
        rng = np.random.default_rng(35)
        sample = random_nonneg_sample(rng, 4, 60)
        q = np.exp(rng.uniform(np.log(0.1), np.log(10.0), 4))
        base = gini_p(sample, p).value
        scaled = gini_p(sample.scaled(q), p).value
        assert abs(scaled - base) <= 1e-9 * max(1.0, base)

    def test_scale_invariance_cholesky_method(self):
        rng = np.random.default_rng(36)
        sample = random_nonneg_sample(rng, 3, 50)
        q = [3.0, 0.25, 1.5]
        base = gini_p(sample, 1.0, method="cholesky").value
        scaled = gini_p(sample.scaled(q), 1.0, method="cholesky").value
        assert abs(scaled - base) <= 1e-9

    def test_rising_tide(self):
        rng = np.random.default_rng(37)
        for _ in range(10):
            sample = random_nonneg_sample(rng, 3, 60)
            shift = rng.uniform(0.1, 2.0, 3)
            assert gini_p(sample.shifted(shift), 1.0).value <= gini_p(sample, 1.0).value + 1e-12

    def test_range_with_nonneg_whitened_support(self):
        rng = np.random.default_rng(38)
        for _ in range(20):
            sample = random_nonneg_sample(rng, int(rng.integers(1, 5)), 50)
            result = gini_p(sample, 1.0)
            if not result.negativity_warning:
                assert 0.0 <= result.value <= 1.0

    def test_normalizer_shift_covariance(self):
        rng = np.random.default_rng(39)
        for _ in range(20):
            sample = random_nonneg_sample(rng, 3, 50)
            result = gini_p(sample, 1.0)
            if result.negativity_warning:
                continue
            shift = rng.uniform(0.05, 2.0, 3)
            shifted = gini_p(sample.shifted(shift), 1.0)
            assert shifted.normalizer >= result.normalizer - 1e-12

    def test_dominant_component_limit_formula(self):
        rng = np.random.default_rng(40)
        sample = random_nonneg_sample(rng, 4, 80)
        result = gini_1_decomposed(sample)
        m_star = np.abs(result.weights) * result.normalizer  # |m*| vector
        ginis = result.component_ginis
        g_cap = float(ginis.max())
        previous_gap = math.inf
        for t in (1.0, 10.0, 100.0, 1e4, 1e6):
            scaled = m_star.copy()
            scaled[0] *= t
            weights = scaled / scaled.sum()
            combination = float(weights @ ginis)
            tail = scaled[1:].sum() / scaled.sum()
            gap = abs(combination - ginis[0])
            assert gap <= tail * g_cap + 1e-15
            assert gap <= previous_gap + 1e-15
            previous_gap = gap
        assert previous_gap <= 1e-5

    def test_negativity_flag_set(self):
        pts = np.array(
            [[1, 1], [2, 2], [3, 3], [4, 4], [5, 5], [6, 6], [7, 7], [8, 8], [0, 4]],
            dtype=float,
        )
        result = gini_p(WeightedSample(pts), 1.0)
        assert result.negativity_warning
        assert result.worst_negative < 0

    def test_weights_populated_only_for_p1(self):
        sample = gen_spike_cube(0.3, 2)
        assert gini_p(sample, 1.0).weights is not None
        assert gini_p(sample, 2.0).weights is None

    def test_zero_whitened_mean_rejected(self):
        sample = WeightedSample([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
        with pytest.raises(NumericalError, match="zero p-norm"):
            gini_p(sample, 1.0)

    def test_exact_cap(self):
        rng = np.random.default_rng(41)
        sample = WeightedSample(rng.lognormal(0, 0.5, (30, 2)))
        with pytest.raises(DataError, match="capped"):
            gini_p(sample, 1.0, exact_cap=10)

    def test_unknown_estimator(self):
        sample = gen_spike_cube(0.3, 1)
        with pytest.raises(DataError, match="estimator"):
            gini_p(sample, 1.0, estimator="bootstrap")

    def test_threads_do_not_change_value(self):
        rng = np.random.default_rng(42)
        sample = WeightedSample(rng.lognormal(0, 0.5, (3000, 2)))
        single = gini_p(sample, 1.0, threads=1).value
        multi = gini_p(sample, 1.0, threads=4).value
        assert single == multi


class TestPairEstimator:
    def test_reproducible_for_fixed_seed(self):
        rng = np.random.default_rng(43)
        sample = WeightedSample(rng.lognormal(0, 0.5, (500, 3)), rng.random(500) + 0.01)
        a = gini_p(sample, 1.0, estimator="pairs", pairs=300_000, seed=7)
        b = gini_p(sample, 1.0, estimator="pairs", pairs=300_000, seed=7)
        assert a.value == b.value
        assert a.std_error == b.std_error
        c = gini_p(sample, 1.0, estimator="pairs", pairs=300_000, seed=8)
        assert c.value != a.value

    def test_consistent_with_exact(self):
        rng = np.random.default_rng(44)
        sample = random_nonneg_sample(rng, 3, 400, weighted=True)
        exact = gini_p(sample, 1.0).value
        estimate = gini_p(sample, 1.0, estimator="pairs", pairs=400_000, seed=5)
        assert abs(estimate.value - exact) <= 4.0 * estimate.std_error
        assert estimate.pair_count == 400_000
        assert estimate.seed == 5

    def test_positive_pair_count_required(self):
        with pytest.raises(DataError, match="pair count"):
            gini_p(gen_spike_cube(0.3, 1), 1.0, estimator="pairs", pairs=0)


class TestDecomposed:
    def test_weights_and_components(self):
        sample = white_product_sample([0.0, 3.0])
        result = gini_1_decomposed(sample)
        means = moments(sample).mean
        np.testing.assert_allclose(result.weights, means / means.sum(), atol=1e-12)
        np.testing.assert_allclose(
            result.component_ginis,
            [1.0 / (2.0 * means[0]), 1.0 / (2.0 * means[1])],
            atol=1e-12,
        )
        assert abs(result.weights.sum() - 1.0) <= 1e-12

    def test_zero_mean_component_rejected(self):
        sample = WeightedSample([[0.0, -1.0], [0.0, 1.0], [2.0, -1.0], [2.0, 1.0]])
        with pytest.raises(NumericalError, match=r"\[1\]"):
            gini_1_decomposed(sample)


class TestGaussianClosedForm:
    def test_one_dimensional(self):
        m = 2.0
        assert gaussian_g1_closed_form([m], [[1.0]]) == pytest.approx(
            1.0 / (m * math.sqrt(math.pi)), abs=1e-14
        )

    def test_identity_covariance(self):
        expected = 1.0 / math.sqrt(math.pi)
        assert gaussian_g1_closed_form([1.0, 1.0, 1.0], np.eye(3)) == pytest.approx(
            expected, abs=1e-14
        )

    def test_monte_carlo_cross_check(self):
        # 1e6 draws, pair-sampled: combined sampling errors are well below 1%
        sample = gen_gaussian([1.0, 1.0, 1.0], np.eye(3), 1_000_000, seed=45)
        estimate = gini_p(sample, 1.0, estimator="pairs", pairs=2_000_000, seed=46)
        closed = gaussian_g1_closed_form([1.0, 1.0, 1.0], np.eye(3))
        assert abs(estimate.value - closed) / closed <= 0.01

    def test_zero_mean_rejected(self):
        with pytest.raises(NumericalError, match="non-null mean"):
            gaussian_g1_closed_form([0.0, 0.0], np.eye(2))

    def test_scale_invariance_of_closed_form(self):
        cov = np.array([[4.0, -2.0], [-2.0, 3.0]])
        mean = np.array([1.0, 2.0])
        q = np.array([3.0, 0.5])
        base = gaussian_g1_closed_form(mean, cov)
        scaled = gaussian_g1_closed_form(q * mean, cov * np.outer(q, q))
        assert scaled == pytest.approx(base, rel=1e-12)
