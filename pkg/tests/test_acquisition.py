import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bowplan.acquisition import (cei, expected_improvement,
                                 feasibility_probability, lex_argmax, low_discrepancy,
                                 maximize_cei)
from bowplan.gp import gp_fit_shared
from bowplan.kinematics import ControlWindow
from oracles import dense_grid_argmax, ei_monte_carlo, phi_series, synthetic_context


# ---------------------------------------------------------------- EI

class TestExpectedImprovement:
    def test_zero_std(self):
        assert expected_improvement(1.0, 0.0, 3.0) == 2.0
        assert expected_improvement(5.0, 0.0, 3.0) == 0.0

    def test_spot_values(self):
        assert expected_improvement(0.0, 1.0, 0.0) == pytest.approx(0.39894, abs=1e-4)
        assert expected_improvement(3.0, 1.0, 0.0) == pytest.approx(0.000382, abs=1e-4)
        assert expected_improvement(3.0, 1.0, 0.0) == pytest.approx(
            -3 * phi_series(-3) + math.exp(-4.5) / math.sqrt(2 * math.pi), rel=1e-12)

    def test_monte_carlo_oracle(self):
        rng = np.random.default_rng(0)
        draws = rng.standard_normal(10 ** 6)
        for _ in range(20):
            mu, sigma, y = rng.normal(), rng.uniform(0.1, 2.0), rng.normal()
            est, se = ei_monte_carlo(mu, sigma, y, draws)
            assert abs(expected_improvement(mu, sigma, y) - est) <= 3 * se + 1e-12

    def test_negative_std_rejected(self):
        with pytest.raises(ValueError):
            expected_improvement(0.0, -1.0, 0.0)

    @settings(max_examples=100, deadline=None)
    @given(mu=st.floats(-5, 5), s=st.floats(0, 5), y=st.floats(-5, 5))
    def test_non_negative(self, mu, s, y):
        assert expected_improvement(mu, s, y) >= 0.0

    def test_non_decreasing_in_sigma(self):
        sig = np.linspace(0.0, 3.0, 301)
        for mu in (-1.0, -0.1, 0.5, 2.0):
            ei = expected_improvement(np.full_like(sig, mu), sig, 0.0)
            assert np.all(np.diff(ei) >= -1e-15)

    def test_vectorized(self):
        out = expected_improvement(np.array([0.0, 1.0]), np.array([1.0, 0.0]), 0.5)
        assert out.shape == (2,)


# ---------------------------------------------------------------- feasibility

class TestFeasibility:
    def test_examples(self):
        assert feasibility_probability([[0.0]], [[1.0]]) == pytest.approx(0.5)
        assert feasibility_probability([[-2.0]], [[1.0]]) == pytest.approx(0.97725, abs=1e-5)
        assert feasibility_probability([[0.0, 0.0]], [[1.0, 2.0]]) == pytest.approx(0.25)

    def test_series_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            mu, s = rng.normal(scale=3.0), rng.uniform(0.05, 3.0)
            assert feasibility_probability([[mu]], [[s]]) == pytest.approx(
                phi_series(-mu / s), abs=1e-10)

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
    def test_product_law(self, k):
        rng = np.random.default_rng(k)
        mu, s = rng.normal(size=k), rng.uniform(0.2, 2.0, size=k)
        expected = math.prod(phi_series(-m / v) for m, v in zip(mu, s))
        assert feasibility_probability(mu[None], s[None]) == pytest.approx(expected, abs=1e-10)

    def test_zero_std_indicator(self):
        assert feasibility_probability([[-0.1]], [[0.0]]) == 1.0
        assert feasibility_probability([[0.0]], [[0.0]]) == 1.0
        assert feasibility_probability([[0.1]], [[0.0]]) == 0.0

    def test_empty_constraints(self):
        assert feasibility_probability(np.zeros((3, 0)), np.zeros((3, 0))).tolist() == [1.0] * 3

    def test_concentrates_with_data(self):
        def c(u):
            return np.sin(6 * u) - 0.2
        window = ControlWindow(np.zeros(1), np.ones(1))
        X = np.linspace(0, 1, 50)[:, None]
        model = gp_fit_shared(X, c(X), np.array([0.1]))
        probe = np.linspace(0, 1, 400)[:, None]
        truth = c(probe)[:, 0]
        mask = np.abs(truth) > 0.2
        m, s = model.predict(probe)
        pf = feasibility_probability(m, s)
        assert np.all(np.abs(pf[mask] - (truth[mask] <= 0)) <= 0.05)
        assert window.contains(probe[0])


# ---------------------------------------------------------------- CEI

class TestCei:
    def test_product_of_components(self):
        ctx = synthetic_context(3)
        rng = np.random.default_rng(0)
        for u in ctx.window.from_unit(rng.uniform(size=(10, 2))):
            m, s = ctx.objective_model.predict(u[None])
            cm, cs = ctx.constraint_posteriors(u[None])
            expected = (expected_improvement(m[0, 0], s[0, 0], ctx.y_minus)
                        * feasibility_probability(cm, cs)[0])
            assert cei(u, ctx) == pytest.approx(expected, rel=1e-12, abs=1e-300)

    def test_no_constraints_equals_ei(self):
        ctx = synthetic_context(4, with_constraint=False)
        u = np.array([0.3, 0.9])
        m, s = ctx.objective_model.predict(u[None])
        assert cei(u, ctx) == pytest.approx(expected_improvement(m[0, 0], s[0, 0], ctx.y_minus))

    def test_zero_feasibility_annihilates(self):
        ctx = synthetic_context(5)
        window = ctx.window
        X = window.from_unit(np.array([[0.1, 0.1], [0.9, 0.9], [0.5, 0.2]]))
        sure = gp_fit_shared(X, np.full((3, 1), 50.0), 0.3 * window.width)
        ctx.constraint_models = [sure]
        assert cei(X[0], ctx) == 0.0

    def test_cei_below_ei(self):
        ctx = synthetic_context(6)
        U = ctx.window.from_unit(np.random.default_rng(1).uniform(size=(50, 2)))
        c, _ = ctx.evaluate(U)
        m, s = ctx.objective_model.predict(U)
        assert np.all(c <= expected_improvement(m[:, 0], s[:, 0], ctx.y_minus) + 1e-15)

    def test_no_incumbent_uses_feasibility(self):
        ctx = synthetic_context(7)
        ctx.y_minus = None
        U = ctx.window.from_unit(np.random.default_rng(2).uniform(size=(5, 2)))
        c, pf = ctx.evaluate(U)
        assert np.array_equal(c, pf)


class TestMaximizeCei:
    def test_matches_dense_grid_1d(self):
        ctx = synthetic_context(11, dim=1)
        u, v = dense_grid_argmax(ctx, 10 ** 4)
        found = maximize_cei(ctx, 256, 0)
        assert abs(found[0] - u[0]) <= 1e-2 * ctx.window.width[0]

    def test_matches_dense_grid_2d_majority(self):
        hits = 0
        for seed in range(20):
            ctx = synthetic_context(100 + seed)
            u, _ = dense_grid_argmax(ctx, 100)
            found = maximize_cei(ctx, 256, seed)
            hits += bool(np.all(np.abs(found - u) <= 1e-2 * ctx.window.width))
        assert hits >= 19

    def test_inside_window(self):
        for seed in range(5):
            ctx = synthetic_context(seed)
            assert ctx.window.contains(maximize_cei(ctx, 64, seed), tol=0.0)

    def test_all_zero_falls_back_to_feasibility(self):
        ctx = synthetic_context(8)
        ctx.y_minus = -1e9          # nothing can improve
        cand = low_discrepancy(ctx.window, 32, 3)
        _, pf = ctx.evaluate(cand)
        found = maximize_cei(ctx, 32, 3)
        assert np.array_equal(found, cand[int(np.argmax(pf))])

    def test_deterministic_per_seed(self):
        ctx = synthetic_context(9)
        assert np.array_equal(maximize_cei(ctx, 128, 42), maximize_cei(ctx, 128, 42))

    def test_budget_validated(self):
        with pytest.raises(ValueError):
            maximize_cei(synthetic_context(0), 0, 0)


class TestTieBreaking:
    def test_lexicographic(self):
        pts = np.array([[1.0, 0.0], [0.5, 2.0], [0.5, 1.0], [2.0, 0.0]])
        assert lex_argmax(np.array([1.0, 3.0, 3.0, 3.0]), pts) == 2

    def test_unique_max(self):
        assert lex_argmax(np.array([0.0, 5.0, 1.0]), np.zeros((3, 2))) == 1
