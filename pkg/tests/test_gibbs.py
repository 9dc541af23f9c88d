import csv
import math

import numpy as np
import pytest
from scipy import stats

from obcseq import kernels
from obcseq._accel import HAVE_NUMBA
from obcseq.distributions import ParameterError, RngStream
from obcseq.gibbs import (
    GibbsConfig,
    PosteriorSamples,
    r_update_rate,
    run_gibbs,
    sample_latent_tables,
    update_p,
    update_r,
)
from obcseq.model import Dataset, Hyperparameters, ModelParams, draw_true_params, generate_labeled_set

from oracles import crt_pmf_enumerated, gof_pvalue


def test_config_defaults_and_validation():
    cfg = GibbsConfig()
    assert (cfg.iterations, cfg.burn_in, cfg.thin, cfg.retained) == (300, 150, 3, 50)
    with pytest.raises(ParameterError):
        GibbsConfig(iterations=10, burn_in=10)
    with pytest.raises(ParameterError):
        GibbsConfig(thin=0)


class TestUpdateP:
    def test_empty_class_is_prior(self):
        h = Hyperparameters(0.3, 2.0, 3.0, 1, 1, 4)
        p0, p1 = update_p(Dataset.empty(4), np.ones(4), h, RngStream(1))
        ref = RngStream(1).generator.beta(np.full((2, 4), 2.0), np.full((2, 4), 3.0))
        assert np.array_equal(p0, ref[0]) and np.array_equal(p1, ref[1])

    def test_literal_update(self):
        # one gene, class-0 counts {5, 0}, r = 1, a0 = b0 = 1 -> Beta(6, 3); class 1 empty -> Beta(1, 1)
        h = Hyperparameters(0.3, 1, 1, 1, 1, 1)
        d = Dataset(np.array([[5], [0]]), np.zeros((0, 1)), 1)
        p0, p1 = update_p(d, [1.0], h, RngStream(2))
        ref = RngStream(2).generator.beta([[6.0], [1.0]], [[3.0], [1.0]])
        assert p0[0] == ref[0, 0] and p1[0] == ref[1, 0]

    def test_literal_update_moments(self):
        h = Hyperparameters(0.3, 1, 1, 1, 1, 1)
        d = Dataset(np.array([[5], [0]]), np.zeros((0, 1)), 1)
        draws = np.array([update_p(d, [1.0], h, RngStream(3).child(i))[0][0] for i in range(20_000)])
        se = math.sqrt(stats.beta(6, 3).var() / draws.size)
        assert abs(draws.mean() - 6 / 9) < 3 * se


class TestLatentTables:
    def test_zero_and_one_counts(self):
        d = Dataset(np.array([[0, 1]]), np.array([[0, 1]]))
        assert np.array_equal(sample_latent_tables(d, [2.0, 0.3], RngStream(4)), [0, 2])

    def test_crt_pmf_single_cell(self):
        d = Dataset(np.array([[3]]), np.zeros((0, 1)), 1)
        draws = np.array([sample_latent_tables(d, [1.0], RngStream(5).child(i))[0] for i in range(20_000)])
        pmf = crt_pmf_enumerated(3, 1.0)
        assert gof_pvalue(draws.astype(int), lambda k: pmf[k], np.arange(4)) > 0.01

    def test_bounds(self):
        d = generate_labeled_set(ModelParams([2.0, 0.5], [0.8, 0.6], [0.7, 0.9]), 0.5, 30, RngStream(6))
        x, _ = d.stacked()
        t = sample_latent_tables(d, [2.0, 0.5], RngStream(7))
        assert np.all(t <= x.sum(axis=0)) and np.all(t >= (x > 0).sum(axis=0))


class TestUpdateR:
    h = Hyperparameters(0.3, 1, 1, 1, 1, 1)

    def test_no_data_is_prior(self):
        h = Hyperparameters(0.3, 1, 1, 2.5, 4.0, 3)
        r = update_r(np.zeros(3), np.full(3, 0.5), np.full(3, 0.5), 0, 0, h, RngStream(8))
        assert np.array_equal(r, RngStream(8).generator.gamma(2.5, np.full(3, 0.25)))

    def test_literal_update(self):
        r = update_r([4.0], [0.5], [0.3], 2, 0, self.h, RngStream(9))
        assert r[0] == RngStream(9).generator.gamma(5.0, 1.0 / (1.0 + 2.0 * math.log(2.0)))

    def test_rate(self):
        assert r_update_rate([0.5], [0.3], 2, 0, 1.0)[0] == pytest.approx(1 + 2 * math.log(2))

    def test_larger_p_gives_smaller_r(self):
        lo = update_r([3.0], [0.3], [0.3], 4, 4, self.h, RngStream(10))
        hi = update_r([3.0], [0.8], [0.8], 4, 4, self.h, RngStream(10))
        assert hi[0] < lo[0]

    @pytest.mark.parametrize("p", [0.0, 1.0, 1.2])
    def test_domain(self, p):
        with pytest.raises(ParameterError):
            update_r([1.0], [p], [0.5], 1, 1, self.h, RngStream(0))


def _posterior_is_valid(post):
    return (
        np.all(post.r > 0) and np.all(np.isfinite(post.r))
        and np.all((post.p0 > 0) & (post.p0 < 1)) and np.all((post.p1 > 0) & (post.p1 < 1))
    )


class TestRunGibbs:
    def test_shapes_and_validity(self):
        h = Hyperparameters(0.3, 1, 1, 1, 1, 4)
        d = generate_labeled_set(draw_true_params(h, RngStream(11)), 0.3, 25, RngStream(12))
        post = run_gibbs(d, h, None, RngStream(13))
        assert post.r.shape == (50, 4)
        assert (post.source_n0, post.source_n1) == (d.n0, d.n1)
        assert _posterior_is_valid(post)
        assert all(isinstance(m, ModelParams) for m in post.draws)

    def test_deterministic(self):
        h = Hyperparameters(0.3, 5, 5, 1, 1, 3)
        d = generate_labeled_set(draw_true_params(h, RngStream(14)), 0.3, 20, RngStream(15))
        a = run_gibbs(d, h, None, RngStream(16))
        b = run_gibbs(d, h, None, RngStream(16))
        assert np.array_equal(a.r, b.r) and np.array_equal(a.p0, b.p0) and np.array_equal(a.p1, b.p1)

    def test_rate_denominator_exceeds_f0(self):
        h = Hyperparameters(0.3, 1, 1, 1, 1.5, 5)
        d = generate_labeled_set(draw_true_params(h, RngStream(17)), 0.3, 30, RngStream(18))
        post = run_gibbs(d, h, GibbsConfig(500, 0, 1), RngStream(19))
        assert post.rate_denominators.shape == (500, 5)
        assert np.all(post.rate_denominators > 1.5)

    def test_gene_mismatch(self):
        with pytest.raises(ParameterError):
            run_gibbs(Dataset.empty(2), Hyperparameters(0.3, 1, 1, 1, 1, 3), None, RngStream(0))

    def test_prior_recovery(self):
        h = Hyperparameters(0.3, 2.0, 3.0, 2.0, 0.5, 2)
        post = run_gibbs(Dataset.empty(2), h, GibbsConfig(20_000, 0, 1), RngStream(20))
        s = len(post)
        r_prior = stats.gamma(2.0, scale=2.0)
        p_prior = stats.beta(2.0, 3.0)
        assert np.all(np.abs(post.r.mean(0) - r_prior.mean()) < 3 * math.sqrt(r_prior.var() / s))
        for p in (post.p0, post.p1):
            assert np.all(np.abs(p.mean(0) - p_prior.mean()) < 3 * math.sqrt(p_prior.var() / s))
            # variance of the sample variance of a Beta(2, 3) draw is small; compare loosely
            assert np.all(np.abs(p.var(0) - p_prior.var()) < 0.1 * p_prior.var())

    def test_conjugate_beta_posterior_with_pinned_dispersion(self):
        h = Hyperparameters(0.5, 1.0, 1.0, 1e8, 1e8, 1)
        truth = ModelParams([1.0], [0.4], [0.6])
        d = generate_labeled_set(truth, 0.5, 40, RngStream(21))
        post = run_gibbs(d, h, GibbsConfig(5100, 100, 1), RngStream(22))
        assert len(post) == 5000
        assert np.all(np.abs(post.r - 1.0) < 1e-3)
        for k, draws in ((0, post.p0[:, 0]), (1, post.p1[:, 0])):
            x = d.counts(k)[:, 0]
            exact = stats.beta(1.0 + x.sum(), 1.0 + x.size * 1.0)
            assert stats.kstest(draws, exact.cdf).statistic < 0.05

    def test_coverage(self):
        h = Hyperparameters(0.5, 1.0, 1.0, 1.0, 1.0, 5)
        hits = total = 0
        for rep in range(10):
            truth = draw_true_params(h, RngStream(23).child(rep))
            d = generate_labeled_set(truth, 0.5, 100, RngStream(24).child(rep))
            # force exactly 50 per class
            d = Dataset(
                generate_labeled_set(truth, 1.0, 50, RngStream(25).child(rep)).counts0,
                generate_labeled_set(truth, 0.0, 50, RngStream(26).child(rep)).counts1,
                5,
            )
            post = run_gibbs(d, h, GibbsConfig(1500, 500, 5), RngStream(27).child(rep))
            for est, true in ((post.p0, truth.p0), (post.p1, truth.p1)):
                ok = np.abs(est.mean(0) - true) <= 3 * est.std(0)
                hits += ok.sum()
                total += ok.size
        assert hits / total >= 0.95

    def test_trace(self, tmp_path):
        h = Hyperparameters(0.3, 1, 1, 1, 1, 2)
        d = generate_labeled_set(draw_true_params(h, RngStream(28)), 0.3, 10, RngStream(29))
        path = tmp_path / "trace.csv"
        post = run_gibbs(d, h, GibbsConfig(20, 10, 2), RngStream(30), trace=path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["sweep", "r_0", "r_1", "p0_0", "p0_1", "p1_0", "p1_1"]
        assert [int(r[0]) for r in rows[1:]] == [10, 12, 14, 16, 18]
        assert float(rows[1][1]) == post.r[0, 0]


def test_posterior_from_draws():
    post = PosteriorSamples.from_draws([ModelParams([1.0], [0.2], [0.7])] * 3, 4, 5)
    assert len(post) == 3 and post.num_genes == 1 and post.source_n1 == 5
    with pytest.raises(ParameterError):
        PosteriorSamples.from_draws([])


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba backend unavailable")
def test_backends_agree():
    h = Hyperparameters(0.3, 1, 1, 1, 1, 4)
    d = generate_labeled_set(draw_true_params(h, RngStream(31)), 0.3, 30, RngStream(32))
    args = (d.class_sums, d.class_sizes, *d.crt_layout, d.occupied_cells, 1.0, 1.0, 1.0, 1.0, 300, 150, 3)
    a = kernels.gibbs_chain_numba(RngStream(33).generator, *args)
    b = kernels.gibbs_chain_numpy(RngStream(33).generator, *args)
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=1e-9)
