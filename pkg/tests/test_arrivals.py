"""Count models: frozen CDF values, approximation-regime orderings, and
the KS distance used for the replication-study comparison."""

import math

import numpy as np
import pytest
from scipy import stats

from mcvd.arrivals import BINOMIAL, GAUSSIAN, POISSON, CountModel, count_cdf, ks_distance


class TestModelValidation:
    @pytest.mark.parametrize(
        "kind,n,p",
        [
            ("weibull", 10, 0.5),
            (BINOMIAL, -1, 0.5),
            (BINOMIAL, 2.5, 0.5),
            (POISSON, math.nan, 1.0),
            (GAUSSIAN, 10, -0.1),
            (GAUSSIAN, 10, 1.5),
            (BINOMIAL, 10, math.nan),
        ],
    )
    def test_rejects_bad_parameters(self, kind, n, p):
        with pytest.raises(ValueError):
            CountModel(kind, n, p)

    def test_poisson_constructor_sets_mean(self):
        m = CountModel.poisson(4.3)
        assert m.mean == 4.3
        assert m.variance == 4.3

    def test_gaussian_moments(self):
        m = CountModel.gaussian(2000, 0.01)
        assert m.mean == 20.0
        assert m.variance == pytest.approx(19.8)


class TestFrozenCdfValues:
    def test_tiny_binomial_by_enumeration(self):
        assert count_cdf(CountModel.binomial(2, 0.5), 1) == pytest.approx(0.75, abs=1e-15)

    def test_poisson_at_zero(self):
        assert count_cdf(CountModel.poisson(1.0), 0) == pytest.approx(math.exp(-1), rel=1e-13)

    def test_poisson_regularized_gamma_route(self):
        # verified against 40-term direct summation
        assert count_cdf(CountModel.poisson(25.0), 15) == pytest.approx(
            0.022293021307365195, rel=1e-11
        )

    def test_binomial_close_to_poisson_in_rare_event_regime(self):
        b = count_cdf(CountModel.binomial(2000, 0.01), 20)
        p = count_cdf(CountModel.poisson(20.0), 20)
        assert b == pytest.approx(0.5590933319987856, rel=1e-11)
        assert abs(b - p) < 0.012


class TestCdfShape:
    @pytest.mark.parametrize(
        "model",
        [
            CountModel.binomial(1000, 0.3),
            CountModel.poisson(7.7),
            CountModel.gaussian(500, 0.2),
        ],
    )
    def test_nondecreasing_from_zero(self, model):
        k = np.arange(-1, 1001)
        c = count_cdf(model, k)
        assert c[0] == 0.0
        assert np.all(np.diff(c) >= -1e-15)
        assert np.all((c >= 0.0) & (c <= 1.0))

    def test_binomial_reaches_one_at_n(self):
        c = count_cdf(CountModel.binomial(1000, 0.3), 1000)
        assert abs(c - 1.0) < 1e-12

    @pytest.mark.parametrize(
        "model",
        [
            CountModel.binomial(5, 0.0),
            CountModel.binomial(0, 0.3),
            CountModel.poisson(0.0),
            CountModel.gaussian(10, 0.0),
        ],
    )
    def test_degenerate_models_are_steps_at_zero(self, model):
        assert count_cdf(model, -1) == 0.0
        assert count_cdf(model, 0) == 1.0

    def test_gaussian_zero_variance_steps_at_mean(self):
        m = CountModel.gaussian(4, 1.0)
        assert count_cdf(m, 3) == 0.0
        assert count_cdf(m, 4) == 1.0

    def test_scalar_array_agree(self):
        m = CountModel.poisson(3.0)
        ks = np.array([-1, 0, 5])
        arr = count_cdf(m, ks)
        assert [count_cdf(m, int(k)) for k in ks] == arr.tolist()

    def test_k_domain_errors(self):
        with pytest.raises(ValueError):
            count_cdf(CountModel.poisson(1.0), -2)
        with pytest.raises(ValueError):
            count_cdf(CountModel.poisson(1.0), 1.5)


def sup_gap(n, p, kind):
    grid = np.arange(-1, n + 1)
    exact = count_cdf(CountModel.binomial(n, p), grid)
    approx = count_cdf(CountModel(kind, n, p), grid)
    return float(np.max(np.abs(exact - approx)))


class TestApproximationRegimes:
    @pytest.mark.parametrize("n,p", [(1000, 0.1), (2000, 0.1), (5000, 0.05), (2000, 0.25)])
    def test_gaussian_wins_when_mean_is_large(self, n, p):
        assert n * p >= 100
        assert sup_gap(n, p, GAUSSIAN) < sup_gap(n, p, POISSON)

    @pytest.mark.parametrize(
        "n,p", [(1000, 0.002), (1000, 0.005), (2000, 0.0021532456), (5000, 0.001)]
    )
    def test_poisson_wins_when_events_are_rare(self, n, p):
        assert n * p <= 5
        assert sup_gap(n, p, POISSON) < sup_gap(n, p, GAUSSIAN)

    def test_binomial_cdf_matches_direct_summation(self):
        # independent oracle: exact integer binomial coefficients
        n, p = 200, 0.37
        for k in (0, 3, 50, 74, 120, 200):
            direct = sum(
                math.comb(n, j) * (p**j) * ((1 - p) ** (n - j)) for j in range(k + 1)
            )
            assert abs(count_cdf(CountModel.binomial(n, p), k) - direct) < 1e-12

    @pytest.mark.parametrize("means", [[3.0], [2.0, 5.0], [1.5, 0.5, 7.0], [4.0, 4.0, 6.0, 20.0]])
    def test_poisson_sums_stay_poisson(self, means):
        # convolve per-term pmfs (scipy.stats route) and compare the CDF of
        # the sum against a single Poisson at the summed mean
        support = np.arange(0, 400)
        pmf = stats.poisson.pmf(support, means[0])
        for mu in means[1:]:
            pmf = np.convolve(pmf, stats.poisson.pmf(support, mu))
        cdf = np.cumsum(pmf)
        k = np.arange(0, 120)
        direct = count_cdf(CountModel.poisson(float(sum(means))), k)
        assert np.max(np.abs(cdf[k] - direct)) < 1e-9


class TestKsDistance:
    def test_empty_sample_rejected(self):
        with pytest.raises(ValueError):
            ks_distance([], CountModel.poisson(1.0))

    def test_degenerate_sample_gap(self):
        d = ks_distance(np.zeros(100, dtype=int), CountModel.poisson(10.0))
        assert d == pytest.approx(1.0 - math.exp(-10), abs=1e-12)

    def test_vanishes_for_matching_model_at_large_n(self):
        rng = np.random.default_rng(42)
        samples = rng.poisson(4.3, 1_000_000)
        assert ks_distance(samples, CountModel.poisson(4.3)) < 0.005

    def test_bounded(self):
        rng = np.random.default_rng(1)
        samples = rng.poisson(3.0, 50)
        d = ks_distance(samples, CountModel.gaussian(100, 0.03))
        assert 0.0 <= d <= 1.0

    @pytest.mark.parametrize("seed", [0, 3])
    def test_replicated_rare_event_counts_prefer_poisson(self, seed):
        # binomial replication draws at the burst/window scale where the
        # Poisson fit visibly beats the Gaussian one
        n, p, reps = 2000, 0.0021532456, 5000
        counts = np.random.default_rng(seed).binomial(n, p, reps)
        ks_p = ks_distance(counts, CountModel.poisson(n * p))
        ks_g = ks_distance(counts, CountModel.gaussian(n, p))
        assert ks_p < ks_g
