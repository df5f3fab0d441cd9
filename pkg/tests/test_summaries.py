import numpy as np
import pytest

from conftest import make_data
from basket_mem.core import AnalysisConfig, PriorConfig
from basket_mem.numerics import Interval, beta_credible_interval, rng_stream
from basket_mem.summaries import (
    BasketSummary,
    analytic_posterior_probability,
    ess,
    fit,
    posterior_probability,
    sample_posterior,
    summarize,
    with_p0,
)


def independence_prior(J):
    m = np.zeros((J, J))
    np.fill_diagonal(m, 1.0)
    return PriorConfig.build(J, prior_exch=m)


class TestPosteriorProbability:
    def test_p0_zero_and_one(self, vemu_mcmc_fit):
        assert np.all(posterior_probability(vemu_mcmc_fit, 0.0) == 1.0)
        assert np.all(posterior_probability(vemu_mcmc_fit, 1.0) == 0.0)
        assert np.all(posterior_probability(vemu_mcmc_fit, 1.0, "less") == 1.0)

    def test_length_mismatch(self, vemu_mcmc_fit):
        with pytest.raises(ValueError):
            posterior_probability(vemu_mcmc_fit, [0.1, 0.2])

    def test_bad_alternative(self, vemu_mcmc_fit):
        with pytest.raises(ValueError):
            posterior_probability(vemu_mcmc_fit, 0.2, "two.sided")

    def test_per_basket_p0(self, vemu_mcmc_fit):
        p0 = [0.25, 0.05, 0.05, 0.1, 0.3, 0.2]
        got = posterior_probability(vemu_mcmc_fit, p0)
        for j, q in enumerate(p0):
            assert got[j] == np.mean(vemu_mcmc_fit.pi_draws[j] > q)

    @pytest.mark.parametrize("p0", [0.15, 0.25, [0.3, 0.05, 0.02, 0.1, 0.35, 0.4]])
    @pytest.mark.parametrize("alternative", ["greater", "less"])
    def test_sample_matches_analytic(self, vemu_exact_fit, p0, alternative):
        sampled = posterior_probability(vemu_exact_fit, p0, alternative)
        exact = analytic_posterior_probability(vemu_exact_fit, p0, alternative)
        assert np.max(np.abs(sampled - exact)) < 0.005

    def test_analytic_needs_exact(self, vemu_mcmc_fit):
        with pytest.raises(TypeError):
            analytic_posterior_probability(vemu_mcmc_fit)


class TestSummarize:
    def test_ordering_of_fields(self, vemu_mcmc_fit):
        for s in summarize(vemu_mcmc_fit):
            assert s.hpd.lower <= s.median <= s.hpd.upper
            assert s.ess > 0
            assert s.p0 == 0.25

    def test_forced_independence_means(self, vemu):
        f = fit(vemu, independence_prior(6), AnalysisConfig(method="exact"))
        for j, s in enumerate(summarize(f)):
            a = 0.5 + vemu.responses[j]
            b = 0.5 + vemu.sizes[j] - vemu.responses[j]
            assert abs(s.mean - a / (a + b)) < 0.005

    def test_single_basket_is_beta(self):
        data = make_data((8,), (19,))
        s, = summarize(fit(data, config=AnalysisConfig(method="exact")))
        ref = rng_stream(99).beta(8.5, 11.5, 200_000)
        assert s.mean == pytest.approx(8.5 / 20, abs=0.003)
        assert s.median == pytest.approx(np.median(ref), abs=0.003)
        et = beta_credible_interval(8.5, 11.5, 0.05)
        assert s.hpd.width < et.width + 0.005

    def test_mcmc_single_basket(self):
        s, = summarize(fit(make_data((8,), (19,)), config=AnalysisConfig(mcmc_iter=50_000, mcmc_burnin=10)))
        assert s.mean == pytest.approx(0.425, abs=0.005)

    def test_reproducible(self, vemu, vemu_prior):
        cfg = AnalysisConfig(method="exact", mcmc_iter=20_000)
        a = summarize(fit(vemu, vemu_prior, cfg))
        b = summarize(fit(vemu, vemu_prior, cfg))
        assert [x.to_dict() for x in a] == [x.to_dict() for x in b]

    def test_permutation_equivariance(self, vemu, vemu_prior, vemu_exact_fit):
        order = [3, 0, 5, 1, 4, 2]
        permuted = fit(vemu.permuted(order), vemu_prior.permuted(order), AnalysisConfig(method="exact", p0=0.25))
        base = analytic_posterior_probability(vemu_exact_fit)
        assert np.allclose(analytic_posterior_probability(permuted), base[order], atol=1e-10)
        rows = summarize(permuted)
        assert [r.name for r in rows] == [vemu.basket_names[k] for k in order]
        means = vemu_exact_fit.pi_draws.mean(axis=1)
        assert np.allclose([r.mean for r in rows], means[order], atol=0.004)

    def test_summary_round_trip(self):
        s = BasketSummary("x", 0.1, 0.5, 0.3, 0.29, Interval(0.1, 0.5), 12.0)
        assert BasketSummary.from_dict(s.to_dict()) == s


class TestEss:
    @pytest.mark.parametrize("a,b,tol", [(3, 7, 0.8), (30, 70, 8), (0.5, 10.5, 1.1), (8.5, 11.5, 2.0)])
    def test_hpd_form_recovers_shape_sum(self, a, b, tol):
        draws = rng_stream(21).beta(a, b, 1_000_000)
        assert ess(draws, 0.05, interval="hpd") == pytest.approx(a + b, abs=tol)

    def test_default_on_near_symmetric_beta(self):
        draws = rng_stream(22).beta(8.5, 11.5, 200_000)
        assert ess(draws, 0.05) == pytest.approx(20.0, rel=0.10)

    def test_default_runs_high_on_skewed_beta(self):
        # equal-tailed beta intervals cannot match a one-sided HPD, so the fit overshoots
        draws = rng_stream(23).beta(0.5, 10.5, 200_000)
        assert ess(draws, 0.05) > 1.3 * 11

    def test_degenerate(self):
        with pytest.raises(ValueError):
            ess(np.full(500, 0.3), 0.05)
        with pytest.raises(ValueError):
            ess(np.linspace(0.1, 0.2, 50), 0.05)

    def test_bad_interval(self):
        with pytest.raises(ValueError):
            ess(np.linspace(0.1, 0.2, 500), 0.05, interval="wald")

    def test_deterministic(self):
        draws = rng_stream(24).beta(2, 5, 20_000)
        assert ess(draws, 0.05, rng_stream(1, 3)) == ess(draws, 0.05, rng_stream(1, 3))


class TestP0Update:
    def test_idempotent(self, vemu_mcmc_fit):
        again = with_p0(vemu_mcmc_fit, 0.25)
        assert np.array_equal(posterior_probability(again), posterior_probability(vemu_mcmc_fit))

    def test_matches_fresh_run(self, vemu, vemu_prior):
        cfg = AnalysisConfig(mcmc_iter=20_000, mcmc_burnin=2_000, p0=0.25)
        updated = with_p0(fit(vemu, vemu_prior, cfg), 0.15)
        fresh = fit(vemu, vemu_prior, AnalysisConfig(mcmc_iter=20_000, mcmc_burnin=2_000, p0=0.15))
        assert np.array_equal(posterior_probability(updated), posterior_probability(fresh))

    def test_invalid(self, vemu_mcmc_fit):
        with pytest.raises(ValueError):
            with_p0(vemu_mcmc_fit, 1.2)
        with pytest.raises(ValueError):
            with_p0(vemu_mcmc_fit, 0.2, "sideways")


class TestSamplePosterior:
    def test_rejects_zero(self, vemu_mcmc_fit):
        with pytest.raises(ValueError):
            sample_posterior(vemu_mcmc_fit, 0, rng_stream(1))

    def test_bootstrap_mean(self, vemu_mcmc_fit):
        x = sample_posterior(vemu_mcmc_fit, 100_000, rng_stream(2))
        assert x.shape == (6, 100_000)
        assert np.max(np.abs(x.mean(axis=1) - vemu_mcmc_fit.pi_draws.mean(axis=1))) < 0.005
        stored = set(vemu_mcmc_fit.pi_draws[0].tolist())
        assert set(x[0, :100].tolist()) <= stored

    def test_exact_fresh_draws(self, vemu_exact_fit):
        x = sample_posterior(vemu_exact_fit, 100_000, rng_stream(3))
        assert np.max(np.abs(x.mean(axis=1) - vemu_exact_fit.pi_draws.mean(axis=1))) < 0.005
        assert not set(x[0, :10].tolist()) & set(vemu_exact_fit.pi_draws[0].tolist())

    def test_deterministic(self, vemu_mcmc_fit):
        a = sample_posterior(vemu_mcmc_fit, 1000, rng_stream(4))
        b = sample_posterior(vemu_mcmc_fit, 1000, rng_stream(4))
        assert np.array_equal(a, b)
