import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdpareto import datagen, metrics, rng
from hdpareto.model_core import ObjectiveTuple, QuadraticObjective, ScalarizationKind, SimplexWeights, simplex_grid_2d
from hdpareto.solvers import mixture_quadratic_minimizer

THREE = np.array([[0.2, 0.8], [0.5, 0.5], [0.8, 0.2]])


class TestEstimationError:
    def test_identical(self):
        assert metrics.estimation_error(np.ones(3), np.ones(3)) == 0.0

    def test_opposite(self):
        assert metrics.estimation_error([1.0, 0.0], [-1.0, 0.0]) == 2.0

    def test_loop_oracle(self):
        gen = rng.stream(2, "err")
        a, b = rng.normal(gen, 9), rng.normal(gen, 9)
        loop = math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))
        assert metrics.estimation_error(a, b) == pytest.approx(loop, abs=1e-14)


class TestExcess:
    def test_zero_at_minimizer(self):
        inst = datagen.make_instance(5, 2, 2, 0.5, 3)
        objs, lam = inst.objectives(), SimplexWeights([0.4, 0.6])
        assert metrics.excess_scalarized(mixture_quadratic_minimizer(objs, lam), objs, lam) == pytest.approx(0, abs=1e-10)

    def test_single_identity(self):
        objs = ObjectiveTuple((QuadraticObjective(np.eye(2), np.zeros(2)),))
        assert metrics.excess_scalarized([1.0, 0.0], objs, [1.0]) == pytest.approx(1.0)

    def test_half_smoothness_bound(self):
        inst = datagen.make_instance(6, 2, 2, 0.5, 37)
        objs, lam = inst.objectives(), SimplexWeights([0.3, 0.7])
        star = mixture_quadratic_minimizer(objs, lam)
        hat = star + 0.1 * rng.normal(rng.stream(37, "delta"), 6)
        nu = np.array([o.smoothness for o in objs])
        assert metrics.excess_scalarized(hat, objs, lam) <= 0.5 * (lam.weights @ nu) * np.sum((hat - star) ** 2) + 1e-12

    def test_chebyshev_is_flagged_approximate(self):
        inst = datagen.make_instance(4, 2, 2, 0.5, 1)
        value, approx = metrics.excess_scalarized(np.zeros(4), inst.objectives(), [0.5, 0.5],
                                                  ScalarizationKind.CHEBYSHEV, return_flag=True)
        assert approx and value >= -1e-9


class TestHypervolumeExact:
    def test_origin(self):
        assert metrics.hypervolume_exact_2d([[0.0, 0.0]], 1.0) == 1.0

    def test_center(self):
        assert metrics.hypervolume_exact_2d([[0.5, 0.5]], 1.0) == 0.25

    def test_three_points_vs_raster(self):
        G = 2000
        c = (np.arange(G) + 0.5) / G
        X, Y = np.meshgrid(c, c, indexing="ij")
        dom = np.zeros_like(X, dtype=bool)
        for x, y in THREE:
            dom |= (X >= x) & (Y >= y)
        assert metrics.hypervolume_exact_2d(THREE, 1.0) == pytest.approx(dom.mean(), abs=2e-3)

    def test_errors(self):
        with pytest.raises(ValueError):
            metrics.hypervolume_exact_2d([[0.1, 0.2, 0.3]], 1.0)
        with pytest.raises(ValueError):
            metrics.hypervolume_exact_2d([[1.5, 0.2]], 1.0)

    def test_empty(self):
        assert metrics.hypervolume_exact_2d(np.zeros((0, 2)), 1.0) == 0.0

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=12))
    def test_monotone_and_bounded(self, pts):
        P = np.array(pts)
        hv = metrics.hypervolume_exact_2d(P, 1.0)
        assert 0.0 <= hv <= 1.0 + 1e-12
        # adding a point never shrinks the dominated region
        assert metrics.hypervolume_exact_2d(np.vstack([P, [[0.5, 0.5]]]), 1.0) >= hv - 1e-12
        # dominated points do not change it
        worst = P.max(axis=0)
        assert metrics.hypervolume_exact_2d(np.vstack([P, worst]), 1.0) == pytest.approx(hv, abs=1e-12)


class TestHypervolumeMC:
    def test_constant(self):
        assert metrics.positive_sphere_constant(2) == pytest.approx(math.pi / 4)

    def test_origin(self):
        hv = metrics.hypervolume_mc([[0.0, 0.0]], metrics.HypervolumeSpec(1.0, 1_000_000, 41))
        assert hv == pytest.approx(1.0, abs=0.01)

    def test_three_points(self):
        hv = metrics.hypervolume_mc(THREE, metrics.HypervolumeSpec(1.0, 1_000_000, 0))
        assert hv == pytest.approx(metrics.hypervolume_exact_2d(THREE, 1.0), rel=0.02)

    def test_three_objectives_box(self):
        hv = metrics.hypervolume_mc([[0.5, 0.5, 0.5]], metrics.HypervolumeSpec(1.0, 200_000, 1))
        assert hv == pytest.approx(0.125, rel=0.03)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            metrics.HypervolumeSpec(1.0, 0)
        with pytest.raises(ValueError):
            metrics.HypervolumeSpec(0.0)

    def test_dispatch_drops_outside_points(self):
        assert metrics.hypervolume([[0.5, 0.5], [3.0, 0.0]], 1.0) == 0.25


class TestFrontBound:
    def test_exact_estimates(self):
        inst = datagen.make_instance(5, 2, 2, 0.5, 4)
        objs = inst.objectives(with_noise=False)
        grid = simplex_grid_2d(10)
        thetas = [mixture_quadratic_minimizer(objs, lam) for lam in grid]
        r = 2 * float(np.abs(metrics.front(objs, thetas)).max())
        eps, _ = metrics.front_epsilons(objs, grid, thetas)
        lhs, rhs, holds = metrics.hypervolume_front_bound(objs, grid, thetas, r)
        assert eps.max() == 0.0 and holds and lhs == pytest.approx(rhs)

    def test_perturbed_instance(self):
        inst = datagen.make_instance(6, 2, 2, 0.5, 43)
        objs = inst.objectives(with_noise=False)
        grid = simplex_grid_2d(50)
        gen = rng.stream(43, "delta")
        thetas = []
        for lam in grid:
            delta = rng.normal(gen, 6)
            thetas.append(mixture_quadratic_minimizer(objs, lam) + 0.05 * delta / np.linalg.norm(delta))
        r = 2 * float(np.abs(metrics.front(objs, [mixture_quadratic_minimizer(objs, l) for l in grid])).max())
        assert metrics.hypervolume_front_bound(objs, grid, thetas, r)[2]

    def test_reference_too_small(self):
        inst = datagen.make_instance(4, 2, 2, 0.5, 5)
        objs = inst.objectives(with_noise=False)
        grid = simplex_grid_2d(5)
        thetas = [mixture_quadratic_minimizer(objs, lam) for lam in grid]
        with pytest.raises(ValueError):
            metrics.hypervolume_front_bound(objs, grid, thetas, 1e-6)


class TestErrorRate:
    def test_cases(self):
        y = np.array([1, 0, 1, 0])
        assert metrics.error_rate([0.9, 0.1, 0.8, 0.2], y) == 0.0
        assert metrics.error_rate([0.1, 0.9, 0.2, 0.8], y) == 1.0
        assert metrics.error_rate([0.9, 0.9, 0.1, 0.1], y) == 0.5

    def test_empty(self):
        with pytest.raises(ValueError):
            metrics.error_rate([], [])
