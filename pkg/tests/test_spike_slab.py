import math

import numpy as np
import pytest

from jointdag import Hyperparameters, adjacency, log_marginal_likelihood, log_mrf_prior, submatrix
from jointdag.errors import DataError

from oracles import random_dag


def dense_marginal(Y, Xg, hyper):
    """n-dimensional evaluation with an explicit inverse."""
    n = len(Y)
    M = np.eye(n) + hyper.tau2 * (Xg @ Xg.T)
    sign, logdet = np.linalg.slogdet(M)
    quad = float(Y @ np.linalg.inv(M) @ Y)
    if hyper.known_variance:
        return -0.5 * logdet - quad / (2 * hyper.sigma2)
    return -0.5 * logdet - 0.5 * (n + 2 * hyper.a0) * math.log(hyper.b0 + 0.5 * quad)


class TestHyperparameters:
    def test_defaults(self):
        h = Hyperparameters()
        assert (h.tau2, h.a, h.b, h.q) == (1.0, 2.75, 0.5, 0.005)
        assert (h.a0, h.b0, h.alpha_offset) == (0.1, 0.01, 10.0)
        assert not h.known_variance
        assert h.effective_R(7) == 7

    def test_known_variance_mode(self):
        assert Hyperparameters(sigma2=2.0).known_variance

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"tau2": 0.0},
            {"sigma2": -1.0},
            {"a": 0.0},
            {"b": -0.1},
            {"q": 1.5},
            {"q": 0.0},
            {"R": -1},
            {"alpha_offset": 2.0},
            {"a0": 0.0},
            {"b0": -2.0},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            Hyperparameters(**kwargs)


class TestLogMrfPrior:
    def test_empty_indicator(self):
        G = np.zeros((3, 3))
        assert log_mrf_prior(np.zeros(3), G, Hyperparameters()) == 0.0

    def test_single_edge_pair(self):
        G = np.zeros((3, 3))
        G[0, 1] = G[1, 0] = 1
        val = log_mrf_prior(np.array([1, 1, 0]), G, Hyperparameters(a=2.75, b=0.5))
        assert val == pytest.approx(-5.5 + 1.0)

    def test_bound_active(self):
        G = np.zeros((3, 3))
        h = Hyperparameters(R=2)
        assert log_mrf_prior(np.array([1, 1, 0]), G, h) == -math.inf

    def test_factorizes_when_b_zero(self):
        rng = np.random.default_rng(0)
        h = Hyperparameters(b=0.0)
        for _ in range(10):
            G = adjacency(random_dag(rng, 6))
            g = rng.integers(0, 2, size=6)
            if g.sum() >= 6:
                continue
            assert log_mrf_prior(g, G, h) == pytest.approx(-h.a * g.sum())

    def test_permutation_invariance(self):
        rng = np.random.default_rng(1)
        h = Hyperparameters()
        for _ in range(10):
            G = adjacency(random_dag(rng, 6))
            g = rng.integers(0, 2, size=6)
            perm = rng.permutation(6)
            Gp = G[np.ix_(perm, perm)]
            assert log_mrf_prior(g[perm], Gp, h) == pytest.approx(log_mrf_prior(g, G, h))

    def test_edge_monotone(self):
        rng = np.random.default_rng(6)
        h = Hyperparameters(b=0.5)
        for _ in range(10):
            G = adjacency(random_dag(rng, 6))
            g = rng.integers(0, 2, size=6)
            g[:2] = 1
            if g.sum() >= 6 or G[0, 1]:
                continue
            before = log_mrf_prior(g, G, h)
            G2 = G.copy()
            G2[0, 1] = G2[1, 0] = 1  # new edge between two included variables
            assert log_mrf_prior(g, G2, h) >= before

    def test_rejects_nonsymmetric(self):
        G = np.zeros((2, 2))
        G[0, 1] = 1
        with pytest.raises(ValueError):
            log_mrf_prior(np.zeros(2), G, Hyperparameters())


class TestSubmatrix:
    def test_all_ones(self):
        X = np.arange(12.0).reshape(4, 3)
        assert np.array_equal(submatrix(X, np.ones(3)), X)

    def test_none(self):
        X = np.arange(12.0).reshape(4, 3)
        assert submatrix(X, np.zeros(3)).shape == (4, 0)

    def test_single_column(self):
        X = np.arange(12.0).reshape(4, 3)
        assert np.array_equal(submatrix(X, np.array([0, 1, 0])), X[:, [1]])


class TestLogMarginalLikelihood:
    def test_empty_model_known_variance(self):
        rng = np.random.default_rng(2)
        Y = rng.standard_normal(6)
        h = Hyperparameters(sigma2=1.0)
        val = log_marginal_likelihood(Y, np.zeros((6, 0)), h)
        assert val == pytest.approx(-0.5 * float(Y @ Y))

    def test_slab_collapse_limit(self):
        rng = np.random.default_rng(3)
        Y = rng.standard_normal(5)
        Xg = rng.standard_normal((5, 2))
        h = Hyperparameters(tau2=1e-14, sigma2=2.0)
        assert log_marginal_likelihood(Y, Xg, h) == pytest.approx(
            -float(Y @ Y) / 4.0, rel=1e-6
        )

    @pytest.mark.parametrize("sigma2", [None, 1.7])
    def test_matches_dense_inverse(self, sigma2):
        rng = np.random.default_rng(4)
        Y = rng.standard_normal(8)
        Xg = rng.standard_normal((8, 3))
        h = Hyperparameters(tau2=1.0, sigma2=sigma2)
        assert log_marginal_likelihood(Y, Xg, h) == pytest.approx(
            dense_marginal(Y, Xg, h), abs=1e-10
        )

    def test_sylvester_identity(self):
        rng = np.random.default_rng(5)
        for n, k in ((6, 2), (9, 4), (5, 5)):
            Xg = rng.standard_normal((n, k))
            tau2 = 0.7
            big = np.linalg.slogdet(np.eye(n) + tau2 * Xg @ Xg.T)[1]
            small = np.linalg.slogdet(np.eye(k) + tau2 * Xg.T @ Xg)[1]
            assert big == pytest.approx(small, rel=1e-10, abs=1e-12)

    def test_rejects_nonfinite(self):
        h = Hyperparameters()
        with pytest.raises(DataError):
            log_marginal_likelihood(np.array([1.0, np.nan]), np.zeros((2, 1)), h)
        with pytest.raises(DataError):
            log_marginal_likelihood(np.ones(2), np.array([[np.inf], [0.0]]), h)
