import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdpareto import rng
from hdpareto.model_core import (
    DimensionMismatch,
    NotStronglyConvex,
    ObjectiveTuple,
    QuadraticObjective,
    ScalarizationKind,
    SimplexWeights,
    eval_objective,
    eval_scalarized,
    fairness_objective,
    fairness_risk_objective,
    grad_objective,
    regularity_of,
    scalarize,
    simplex_grid_2d,
)
from hdpareto.solvers import mixture_quadratic_minimizer


def random_psd(seed, d):
    G = rng.normal(rng.stream(seed, "psd"), (d, d))
    return G @ G.T / d + 0.1 * np.eye(d)


class TestEvalObjective:
    def test_value_at_center_is_offset(self):
        obj = QuadraticObjective(random_psd(1, 4), np.arange(4.0), 0.25)
        assert eval_objective(obj.center, obj) == pytest.approx(0.25, abs=1e-15)

    def test_identity_squared_norm(self):
        obj = QuadraticObjective(np.eye(2), np.zeros(2))
        assert eval_objective([3.0, 4.0], obj) == 25.0

    def test_triple_loop_oracle(self):
        gen = rng.stream(7, "oracle")
        Q = random_psd(7, 3)
        b = rng.normal(gen, 3)
        theta = rng.normal(gen, 3)
        expected = 0.0
        for i in range(3):
            for j in range(3):
                expected += (theta[i] - b[i]) * Q[i, j] * (theta[j] - b[j])
        assert eval_objective(theta, QuadraticObjective(Q, b)) == pytest.approx(expected, rel=1e-13)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            eval_objective(np.zeros(3), QuadraticObjective(np.eye(2), np.zeros(2)))

    def test_rejects_non_psd_and_negative_offset(self):
        with pytest.raises(ValueError):
            QuadraticObjective(-np.eye(2), np.zeros(2))
        with pytest.raises(ValueError):
            QuadraticObjective(np.eye(2), np.zeros(2), -1.0)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 6), st.floats(0, 10))
    def test_never_below_offset(self, seed, d, c):
        obj = QuadraticObjective(random_psd(seed, d), np.zeros(d), c)
        theta = rng.normal(rng.stream(seed, "theta"), d) * 10
        assert eval_objective(theta, obj) >= c - 1e-10


class TestGradient:
    def test_zero_at_center(self):
        obj = QuadraticObjective(random_psd(2, 3), np.ones(3))
        np.testing.assert_array_equal(grad_objective(np.ones(3), obj), np.zeros(3))

    def test_identity(self):
        v = np.array([1.0, -2.0, 0.5])
        np.testing.assert_allclose(grad_objective(v, QuadraticObjective(np.eye(3), np.zeros(3))), 2 * v)

    def test_finite_differences(self):
        gen = rng.stream(3, "fd")
        obj = QuadraticObjective(random_psd(3, 5), rng.normal(gen, 5))
        theta = rng.normal(gen, 5)
        h = 1e-5
        fd = np.array([(eval_objective(theta + h * e, obj) - eval_objective(theta - h * e, obj)) / (2 * h)
                       for e in np.eye(5)])
        np.testing.assert_allclose(grad_objective(theta, obj), fd, atol=1e-6)


class TestScalarize:
    def test_one_hot_equals_objective(self):
        objs = ObjectiveTuple((QuadraticObjective(np.eye(2), np.zeros(2)),
                               QuadraticObjective(2 * np.eye(2), np.ones(2))))
        theta = np.array([0.3, -0.7])
        lam = SimplexWeights.one_hot(2, 0)
        for kind in ScalarizationKind:
            assert eval_scalarized(theta, objs, lam, kind) == pytest.approx(eval_objective(theta, objs[0]))

    def test_arithmetic(self):
        lam = SimplexWeights([0.5, 0.5])
        assert scalarize([2.0, 4.0], lam) == 3.0
        assert scalarize([2.0, 4.0], lam, ScalarizationKind.CHEBYSHEV) == 2.0

    def test_linear_matches_sum(self):
        gen = rng.stream(11, "scalarize")
        objs = ObjectiveTuple(tuple(QuadraticObjective(random_psd(11 + k, 4), rng.normal(gen, 4)) for k in range(3)))
        lam = SimplexWeights.normalized(rng.uniform(gen, 3))
        theta = rng.normal(gen, 4)
        expected = sum(w * eval_objective(theta, o) for w, o in zip(lam.weights, objs))
        assert eval_scalarized(theta, objs, lam) == pytest.approx(expected, abs=1e-12)

    def test_weight_count_mismatch(self):
        with pytest.raises(DimensionMismatch):
            scalarize([1.0, 2.0, 3.0], SimplexWeights([0.5, 0.5]))


class TestSimplexWeights:
    def test_rejects_bad_weights(self):
        for bad in ([0.5, 0.6], [-0.1, 1.1], [np.nan, 1.0]):
            with pytest.raises(ValueError):
                SimplexWeights(bad)

    def test_grid_endpoints(self):
        grid = simplex_grid_2d(10)
        assert len(grid) == 10
        np.testing.assert_array_equal(grid[0].weights, [0.0, 1.0])
        np.testing.assert_array_equal(grid[-1].weights, [1.0, 0.0])


class TestFairnessObjectives:
    def test_zero_mu(self):
        obj = fairness_objective(np.zeros(3))
        assert eval_objective(np.array([1.0, 2.0, 3.0]), obj) == 0.0

    def test_unit_mu(self):
        assert eval_objective(np.array([3.0, -1.0]), fairness_objective(np.array([1.0, 0.0]))) == 9.0

    def test_squared_dot(self):
        gen = rng.stream(5, "fair")
        mu = rng.normal(gen, 6)
        mu /= np.linalg.norm(mu)
        theta = rng.normal(gen, 6)
        assert eval_objective(theta, fairness_objective(mu)) == pytest.approx((mu @ theta) ** 2, abs=1e-12)

    def test_risk_quad(self):
        np.testing.assert_array_equal(fairness_risk_objective(np.zeros(3), np.zeros(3), 0.0).quad, np.eye(3))
        Q = fairness_risk_objective(np.zeros(3), np.array([1.0, 0, 0]), 0.0).quad
        np.testing.assert_array_equal(np.diag(Q), [2.0, 1.0, 1.0])
        mu = rng.normal(rng.stream(9, "mu"), 5)
        Q = fairness_risk_objective(np.zeros(5), mu, 0.0).quad
        assert np.linalg.eigvalsh(Q)[-1] == pytest.approx(1 + mu @ mu, abs=1e-10)


class TestRegularity:
    def test_identity_constants(self):
        objs = ObjectiveTuple(tuple(QuadraticObjective(np.eye(3), np.full(3, k)) for k in range(3)))
        c = regularity_of(objs, [SimplexWeights([1 / 3, 1 / 3, 1 / 3])])
        np.testing.assert_allclose(c.strong_convexity, 2.0)
        np.testing.assert_allclose(c.smoothness, 2.0)

    def test_single_objective_has_zero_gradient(self):
        objs = ObjectiveTuple((QuadraticObjective(random_psd(4, 3), np.ones(3)),))
        assert regularity_of(objs, [SimplexWeights([1.0])]).grad_sup[0] == pytest.approx(0.0, abs=1e-12)

    def test_grad_sup_brute_force(self):
        gen = rng.stream(13, "reg")
        objs = ObjectiveTuple(tuple(QuadraticObjective(random_psd(13 + k, 4), rng.normal(gen, 4)) for k in range(2)))
        grid = simplex_grid_2d(15)
        c = regularity_of(objs, grid)
        for k in range(2):
            brute = max(np.linalg.norm(grad_objective(mixture_quadratic_minimizer(objs, lam), objs[k])) for lam in grid)
            assert c.grad_sup[k] == pytest.approx(brute, rel=1e-12)

    def test_needs_strong_convexity(self):
        objs = ObjectiveTuple((fairness_objective(np.ones(2)),))
        with pytest.raises(NotStronglyConvex):
            regularity_of(objs, [SimplexWeights([1.0])])
