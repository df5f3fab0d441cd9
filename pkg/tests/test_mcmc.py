import numpy as np
import pytest
from scipy import stats

from conftest import make_data
from basket_mem.core import AnalysisConfig, ExchConfig, PriorConfig
from basket_mem.exact import fit_exact
from basket_mem.mcmc import flip_counts, flip_masks, fit_mcmc, propose_flip
from basket_mem.numerics import rng_stream
from basket_mem.summaries import STREAM_ENGINE

DEFAULT_SEED = AnalysisConfig.seed


def forced_prior(J, value):
    m = np.full((J, J), float(value))
    np.fill_diagonal(m, 1.0)
    return PriorConfig.build(J, prior_exch=m)


def run(data, prior, **kw):
    cfg = AnalysisConfig(**kw)
    return fit_mcmc(data, prior, cfg, rng_stream(cfg.seed, STREAM_ENGINE))


class TestProposal:
    def test_two_baskets_always_flip(self):
        rng = rng_stream(1)
        cur = ExchConfig(2, 0)
        for _ in range(50):
            nxt = propose_flip(cur, rng)
            assert nxt.bits == cur.bits ^ 1
            cur = nxt

    def test_needs_two_baskets(self):
        with pytest.raises(ValueError):
            propose_flip(ExchConfig(1, 0), rng_stream(1))

    def test_uniform_k_chi_square(self):
        k = flip_counts(rng_stream(2), 6, 100_000, law="uniform")
        counts = np.bincount(k, minlength=7)[1:]
        assert counts.sum() == 100_000
        assert stats.chisquare(counts).pvalue > 0.01

    def test_uniform_k_realized_by_masks(self):
        masks = flip_masks(rng_stream(3), 6, 60_000, law="uniform")
        k = np.array([bin(m).count("1") for m in masks])
        assert stats.chisquare(np.bincount(k, minlength=7)[1:]).pvalue > 0.01

    def test_geometric_k_law(self):
        n = 15
        k = flip_counts(rng_stream(4), n, 200_000)
        assert k.min() == 1 and k.max() <= n
        # P(k) = 2^-k for k < 8, tail k >= 8 lumped with mass 2^-7
        obs = np.append(np.bincount(k, minlength=8)[1:8], np.count_nonzero(k >= 8))
        exp = np.array([0.5**j for j in range(1, 8)] + [0.5**7]) * k.size
        assert stats.chisquare(obs, exp).pvalue > 0.01

    def test_cells_uniform_given_k(self):
        masks = np.array(flip_masks(rng_stream(5), 6, 60_000, law="uniform"))
        k = np.array([bin(int(m)).count("1") for m in masks])
        for kk in (1, 3):
            sel = masks[k == kk]
            hits = np.array([[(int(m) >> c) & 1 for c in range(6)] for m in sel]).sum(axis=0)
            assert stats.chisquare(hits).pvalue > 0.01

    @pytest.mark.parametrize("law", ["geometric", "uniform"])
    def test_symmetry_by_construction(self, law):
        # P(A -> B) depends on A, B only through the popcount of A ^ B, so it equals P(B -> A)
        J = 3
        n = 3
        rng = rng_stream(6)
        masks = np.array(flip_masks(rng, n, 200_000, law=law))
        freq = np.bincount(masks, minlength=1 << n) / masks.size
        for a in range(1 << n):
            for b in range(1 << n):
                if a != b:
                    assert freq[a ^ b] == freq[b ^ a]
        # and cells with the same popcount are equally likely
        for k in range(1, n + 1):
            same = [freq[m] for m in range(1, 1 << n) if bin(m).count("1") == k]
            assert max(same) - min(same) < 0.01
        assert freq[0] == 0.0
        assert ExchConfig(J, 5).flipped([0, 2]).flipped([0, 2]) == ExchConfig(J, 5)

    def test_unknown_law(self):
        with pytest.raises(ValueError):
            flip_counts(rng_stream(1), 3, 5, law="poisson")

    def test_wide_masks(self):
        # more than 62 cells falls back to python integers
        masks = flip_masks(rng_stream(7), 66, 20)
        assert all(0 < m < (1 << 66) for m in masks)


class TestFitMcmc:
    def test_forced_exchangeable(self):
        t = run(make_data((1, 9), (10, 10)), forced_prior(2, 1.0),
                mcmc_iter=5000, mcmc_burnin=100, initial_config=ExchConfig(2, 1))
        assert t.pep[0, 1] == 1.0
        assert set(t.config_tally) == {1}

    def test_invalid_start(self):
        with pytest.raises(ValueError, match="zero prior"):
            run(make_data((1, 9), (10, 10)), forced_prior(2, 1.0), mcmc_iter=10,
                initial_config=ExchConfig(2, 0))

    def test_default_start_respects_forced_prior(self):
        t = run(make_data((1, 9), (10, 10)), forced_prior(2, 1.0), mcmc_iter=1000, mcmc_burnin=0)
        assert t.pep[0, 1] == 1.0

    def test_triple_against_exact(self):
        data, prior = make_data((1, 1, 9), (10, 10, 10)), PriorConfig.build(3)
        t = run(data, prior)
        assert np.max(np.abs(t.pep - fit_exact(data, prior).pep)) < 0.01

    @pytest.mark.parametrize("S,n", [((1, 1, 9), (10, 10, 10)), ((2, 3, 1, 4), (6, 7, 5, 8))])
    def test_chain_invariance_total_variation(self, S, n):
        data, prior = make_data(S, n), PriorConfig.build(len(S))
        exact = fit_exact(data, prior)
        t = run(data, prior, mcmc_iter=1_000_000, mcmc_burnin=10_000)
        freq = np.zeros(exact.weights.size)
        for bits, c in t.config_tally.items():
            freq[bits] = c / t.iter
        assert 0.5 * np.abs(freq - exact.weights).sum() < 0.01

    def test_trace_invariants(self, vemu, vemu_prior):
        t = run(vemu, vemu_prior, mcmc_iter=20_000, mcmc_burnin=1_000)
        assert sum(t.config_tally.values()) == t.iter == 20_000
        assert t.pi_draws.shape == (6, 20_000)
        assert np.array_equal(t.pep, t.pep.T) and np.all(np.diag(t.pep) == 1)
        for i in range(6):
            for j in range(i + 1, 6):
                c = ExchConfig.cell_index(6, i, j)
                on = sum(v for b, v in t.config_tally.items() if (b >> c) & 1)
                assert t.pep[i, j] == on / t.iter
        top = max(t.config_tally.values())
        assert t.config_tally[t.map_config.bits] == top
        assert 0 < t.acceptance_rate <= 1 + 1_000 / 20_000

    def test_reproducible(self, vemu, vemu_prior):
        a = run(vemu, vemu_prior, mcmc_iter=5_000, mcmc_burnin=500, seed=11)
        b = run(vemu, vemu_prior, mcmc_iter=5_000, mcmc_burnin=500, seed=11)
        c = run(vemu, vemu_prior, mcmc_iter=5_000, mcmc_burnin=500, seed=12)
        assert a.config_tally == b.config_tally and np.array_equal(a.pi_draws, b.pi_draws)
        assert not np.array_equal(a.pi_draws, c.pi_draws)

    def test_single_basket(self):
        t = run(make_data((8,), (19,)), PriorConfig.build(1), mcmc_iter=50_000, mcmc_burnin=0)
        assert abs(t.pi_draws[0].mean() - 0.425) < 0.005

    def test_vemu_nsclc_ecd(self, vemu, vemu_prior):
        t = run(vemu, vemu_prior)
        assert abs(t.pep[0, 4] - 0.938) <= 0.02

    @pytest.mark.slow
    def test_doubling_stability(self, vemu, vemu_prior):
        a = run(vemu, vemu_prior)
        b = run(vemu, vemu_prior, mcmc_iter=400_000)
        assert np.max(np.abs(a.pep - b.pep)) <= 0.01
