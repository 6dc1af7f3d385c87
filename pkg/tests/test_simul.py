import numpy as np
import pytest
from scipy.special import iv

from fixtures import expcos
from offwhite import SimConfig, empirical_cca, sample_paths
from offwhite.errors import EmbeddingNotPSD, RankDeficient, SpecError
from offwhite.paf import MomentTable
from offwhite.simul import embed, gram_sigma, null_quantile


def test_embedding_covariance_is_bessel():
    emb = embed(SimConfig(expcos(), 8, 100))
    np.testing.assert_allclose(emb.covariance, iv(np.arange(emb.covariance.size), 0.5), rtol=1e-10, atol=1e-15)


def test_sample_covariance_converges():
    X = sample_paths(SimConfig(expcos(), 4, 40000, seed=3))
    r = [np.mean(X[:, 0] * X[:, k]) for k in range(4)]
    np.testing.assert_allclose(r, iv(np.arange(4), 0.5), atol=0.03)


def test_reproducible_by_seed():
    cfg = SimConfig(expcos(), 4, 200, seed=11)
    assert np.array_equal(sample_paths(cfg), sample_paths(cfg))
    assert np.array_equal(sample_paths(cfg, threads=1), sample_paths(cfg, threads=4))
    assert not np.array_equal(sample_paths(cfg), sample_paths(SimConfig(expcos(), 4, 200, seed=12)))


def test_not_psd_rejected():
    c = np.zeros(40)
    c[:2] = [1.0, 0.9]  # spectrum 1 + 1.8 cos(theta) goes negative
    with pytest.raises(EmbeddingNotPSD):
        embed(SimConfig(MomentTable(c), 4, 100))


def test_rank_deficient():
    with pytest.raises(RankDeficient):
        empirical_cca(np.ones((10, 8)), 4)


def test_config_checks():
    with pytest.raises(SpecError):
        SimConfig(expcos(), 0, 100)
    with pytest.raises(SpecError):
        SimConfig(expcos(), 8, 100, embedding_size=24)


def test_white_null_quantile_small():
    q = null_quantile(4, 400, reps=50, seed=1)
    assert np.all(q > 0) and np.all(q < 0.3)


def test_gram_sigma_matches_block_covariance():
    p = 4
    r = iv(np.arange(2 * p), 0.5)
    S = r[np.abs(np.subtract.outer(np.arange(2 * p), np.arange(2 * p)))]
    from offwhite.paf import whitened_correlations
    oracle = whitened_correlations(S[:p, :p], S[p:, p:], S[:p, p:])
    np.testing.assert_allclose(gram_sigma(expcos(), p), oracle, atol=1e-10)


def test_standard_error_halves_when_paths_quadruple():
    p, reps = 2, 60

    def spread(n):
        s = [empirical_cca(sample_paths(SimConfig(expcos(), p, n, seed=1000 + i)), p)[0] for i in range(reps)]
        return float(np.std(s))

    ratio = spread(1600) / spread(400)
    assert 0.35 < ratio < 0.7
