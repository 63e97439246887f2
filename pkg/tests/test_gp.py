import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import qmc

from bowplan.errors import InvalidInputError
from bowplan.gp import (KernelHyperparams, default_hyperparams, fit_hyperparams, gp_fit,
                        gp_fit_shared, gp_posterior, kernel_se_ard, log_marginal_likelihood)
from oracles import dense_gp_oracle


def random_problem(rng, n):
    X = rng.uniform(0, 1, size=(n, 2))
    y = np.sin(4 * X[:, 0]) + X[:, 1] ** 2 + 0.1 * rng.normal(size=n)
    h = KernelHyperparams(float(rng.uniform(0.5, 2.0)), tuple(rng.uniform(0.2, 0.8, 2)),
                          float(rng.uniform(1e-3, 1e-1)))
    return X, y, h


class TestKernel:
    def test_zero_distance(self):
        h = KernelHyperparams(2.5, (0.3, 0.7))
        assert kernel_se_ard([0.1, 0.2], [0.1, 0.2], h) == 2.5

    def test_unit_distance(self):
        h = KernelHyperparams(1.0, (1.0,))
        assert kernel_se_ard([0.0], [1.0], h) == pytest.approx(0.60653, abs=1e-5)
        assert kernel_se_ard([0.0], [1.0], h) == pytest.approx(math.exp(-0.5), abs=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
    def test_symmetry(self, xs):
        h = KernelHyperparams(1.3, (0.4, 2.0))
        assert kernel_se_ard(xs[:2], xs[2:], h) == kernel_se_ard(xs[2:], xs[:2], h)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            kernel_se_ard([0.0, 1.0], [0.0], KernelHyperparams(1.0, (1.0, 1.0)))

    def test_hyperparam_validation(self):
        with pytest.raises(InvalidInputError):
            KernelHyperparams(0.0, (1.0,))
        with pytest.raises(InvalidInputError):
            KernelHyperparams(1.0, (0.0,))
        with pytest.raises(InvalidInputError):
            KernelHyperparams(1.0, (1.0,), -1.0)


class TestPosterior:
    def test_single_point_interpolation(self):
        m = gp_fit(([[0.3, 0.4]], [2.0]), KernelHyperparams(1.0, (0.5, 0.5)))
        mean, std = gp_posterior(m, [0.3, 0.4])
        assert mean == pytest.approx(2.0, abs=1e-12)
        assert std <= 1e-6

    @pytest.mark.parametrize("seed", range(5))
    def test_dense_oracle_ten_points(self, seed):
        rng = np.random.default_rng(seed)
        X, y, h = random_problem(rng, 10)
        model = gp_fit((X, y), h)
        Q = rng.uniform(-0.2, 1.2, size=(20, 2))
        om, os_ = dense_gp_oracle(X, y, Q, h.signal_variance, h.lengthscales,
                               float(model.effective_noise_variance[0]))
        mean, std = model.predict(Q)
        np.testing.assert_allclose(mean[:, 0], om, atol=1e-8, rtol=0)
        np.testing.assert_allclose(std[:, 0], os_, atol=1e-8, rtol=0)

    def test_duplicate_inputs(self):
        X = np.array([[0.1, 0.1], [0.1, 0.1], [0.5, 0.5]])
        m = gp_fit((X, [1.0, 1.0, 0.0]), KernelHyperparams(1.0, (0.3, 0.3)))
        assert np.all(np.isfinite(m.predict(X)[0]))

    def test_noise_free_training_std(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(0, 1, size=(8, 2))
        y = rng.normal(size=8)
        h = KernelHyperparams(float(np.var(y)), (0.3, 0.3), 0.0)
        _, std = gp_fit((X, y), h).predict(X)
        assert np.all(std <= 1e-6 * math.sqrt(h.signal_variance))

    def test_default_noise_bounds_training_std(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(0, 1, size=(8, 2))
        y = rng.normal(size=8)
        h = default_hyperparams(y, np.array([1.0, 1.0]))
        _, std = gp_fit((X, y), h).predict(X)
        assert np.all(std <= 2e-4 * math.sqrt(h.signal_variance))

    def test_prior_reversion(self):
        X = np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1]])
        y = np.array([1.0, 2.0, 4.0])
        h = KernelHyperparams(3.0, (0.1, 0.1))
        mean, std = gp_posterior(gp_fit((X, y), h), [50.0, 50.0])
        assert mean == pytest.approx(y.mean())
        assert std == pytest.approx(math.sqrt(3.0))

    def test_query_dimension(self):
        m = gp_fit(([[0.0, 0.0]], [1.0]), KernelHyperparams(1.0, (1.0, 1.0)))
        with pytest.raises(InvalidInputError):
            gp_posterior(m, [0.0])

    def test_empty_data_rejected(self):
        with pytest.raises(InvalidInputError):
            gp_fit((np.zeros((0, 2)), np.zeros(0)), KernelHyperparams(1.0, (1.0, 1.0)))

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        X, y, h = random_problem(rng, 12)
        Q = rng.uniform(size=(5, 2))
        a = gp_fit((X, y), h).predict(Q)
        b = gp_fit((X, y), h).predict(Q)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_converges_on_lipschitz_function(self):
        probe = np.linspace(0, 1, 200)[:, None]
        errors = []
        for n in (5, 20, 80):
            X = qmc.Halton(d=1, scramble=False).random(n + 1)[1:]
            y = np.sin(3 * X[:, 0])
            model = gp_fit((X, y), default_hyperparams(y, np.array([1.0])))
            errors.append(np.abs(model.predict(probe)[0][:, 0] - np.sin(3 * probe[:, 0])).max())
        assert errors[0] >= errors[1] >= errors[2]
        assert errors[2] < 0.05


class TestSharedFit:
    def test_matches_individual_fits(self):
        rng = np.random.default_rng(4)
        X = rng.uniform(size=(6, 2))
        Y = rng.normal(size=(6, 3)) * [1.0, 5.0, 0.01]
        ls = np.array([0.3, 0.5])
        shared = gp_fit_shared(X, Y, ls)
        Q = rng.uniform(size=(7, 2))
        ms, ss = shared.predict(Q)
        for j in range(3):
            h = default_hyperparams(Y[:, j], ls / 0.3)
            m, s = gp_fit((X, Y[:, j]), h).predict(Q)
            np.testing.assert_allclose(ms[:, j], m[:, 0], rtol=1e-9, atol=1e-12)
            np.testing.assert_allclose(ss[:, j], s[:, 0], rtol=1e-9, atol=1e-12)

    def test_constant_targets(self):
        X = np.array([[0.0], [0.5], [1.0]])
        m = gp_fit_shared(X, np.full((3, 1), 4.0), np.array([0.3]))
        mean, std = m.predict(np.array([[0.25]]))
        assert mean[0, 0] == pytest.approx(4.0)
        assert std[0, 0] <= math.sqrt(1e-6) + 1e-12


class TestMarginalLikelihood:
    def test_matches_dense_formula(self):
        rng = np.random.default_rng(2)
        X, y, h = random_problem(rng, 9)
        K = np.array([[kernel_se_ard(a, b, h) for b in X] for a in X])
        K += (h.noise_variance + 1e-13 * h.signal_variance) * np.eye(9)
        r = y - y.mean()
        _, logdet = np.linalg.slogdet(K)
        expected = -0.5 * r @ np.linalg.solve(K, r) - 0.5 * logdet - 4.5 * math.log(2 * math.pi)
        assert log_marginal_likelihood(X, y, h) == pytest.approx(expected, rel=1e-9)

    def test_fit_improves_likelihood(self):
        rng = np.random.default_rng(5)
        X = rng.uniform(size=(15, 2))
        y = np.sin(6 * X[:, 0])
        width = np.array([1.0, 1.0])
        h0 = default_hyperparams(y, width)
        h1 = fit_hyperparams(X, y, width, n_starts=2, max_iter=20)
        assert log_marginal_likelihood(X, y, h1) >= log_marginal_likelihood(X, y, h0)
        # the irrelevant second input should get the longer lengthscale
        assert h1.lengthscales[1] > h1.lengthscales[0]
