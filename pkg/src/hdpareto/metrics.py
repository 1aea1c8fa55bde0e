"""Quality measures for estimated Pareto points and fronts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng
from .model_core import (
    DimensionMismatch,
    ObjectiveTuple,
    ScalarizationKind,
    SimplexWeights,
    _check_lambda,
    eval_scalarized,
    objective_values,
    regularity_of,
)
from .solvers import SingularScalarization, mixture_quadratic_minimizer

MC_CHUNK = 100_000


@dataclass(frozen=True)
class FrontPoint:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError(f"front point entries must be finite and non-negative: {v}")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class HypervolumeSpec:
    reference: float
    samples: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if not self.reference > 0:
            raise ValueError("reference must be positive")
        if self.samples < 1:
            raise ValueError("need at least one Monte-Carlo sample")


def _as_matrix(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        P = np.atleast_2d(points.astype(float))
    else:
        P = np.array([p.values if isinstance(p, FrontPoint) else p for p in points], dtype=float)
    if P.size == 0:
        return P.reshape(0, 2)
    return P


def estimation_error(theta_hat, theta_star) -> float:
    a = np.asarray(theta_hat, dtype=float)
    b = np.asarray(theta_star, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    return float(np.linalg.norm(a - b))


def _chebyshev_minimum(objs: ObjectiveTuple, lam: SimplexWeights, grid_size: int = 201) -> float:
    """min_theta max_k lam_k L_k(theta) through the concave dual max_w min_theta sum_k w_k lam_k L_k.

    Dual grid over the simplex, refined by golden-section search for K = 2.
    """
    def dual(w):
        ww = w * lam.weights
        if ww.sum() <= 0:
            return -np.inf
        try:
            theta = mixture_quadratic_minimizer(objs, SimplexWeights.normalized(ww))
        except SingularScalarization:
            return -np.inf
        return float(ww @ objective_values(theta, objs))

    if objs.K == 1:
        return float(lam[0] * objs[0].offset)
    if objs.K == 2:
        ts = np.linspace(0.0, 1.0, grid_size)
        vals = [dual(np.array([t, 1 - t])) for t in ts]
        i = int(np.argmax(vals))
        lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, grid_size - 1)]
        g = (math.sqrt(5) - 1) / 2
        for _ in range(80):
            a = hi - g * (hi - lo)
            b = lo + g * (hi - lo)
            if dual(np.array([a, 1 - a])) < dual(np.array([b, 1 - b])):
                lo = a
            else:
                hi = b
        t = 0.5 * (lo + hi)
        return max(max(vals), dual(np.array([t, 1 - t])))
    # K >= 3: dual grid on a seeded Dirichlet cloud plus the vertices
    gen = rng.stream(0, "chebyshev-dual")
    cloud = gen.dirichlet(np.ones(objs.K), size=grid_size * objs.K)
    cloud = np.vstack([np.eye(objs.K), cloud])
    return max(dual(w) for w in cloud)


def excess_scalarized(theta_hat, objs: ObjectiveTuple, lam, kind: ScalarizationKind = ScalarizationKind.LINEAR,
                      return_flag: bool = False):
    """S(L(theta_hat)) - min_theta S(L(theta)).

    Linear: exact, computed as (theta_hat - theta*)^T M (theta_hat - theta*)
    with M = sum_k lam_k Q_k, which equals the difference of values.
    Chebyshev: the minimum comes from a dual search and is approximate.
    With ``return_flag`` the result is ``(value, approximate)``.
    """
    lam = _check_lambda(lam, objs.K)
    theta_hat = np.asarray(theta_hat, dtype=float)
    if kind is ScalarizationKind.LINEAR:
        theta_star = mixture_quadratic_minimizer(objs, lam)
        M = sum(w * obj.quad for w, obj in zip(lam.weights, objs))
        diff = theta_hat - theta_star
        value, approx = float(diff @ M @ diff), False
    else:
        value = eval_scalarized(theta_hat, objs, lam, kind) - _chebyshev_minimum(objs, lam)
        approx = True
    return (value, approx) if return_flag else value


def hypervolume_exact_2d(points, r: float) -> float:
    """Area of the part of [0, r]^2 weakly dominated by the points (sort-and-sweep)."""
    P = _as_matrix(points)
    if P.shape[0] == 0:
        return 0.0
    if P.shape[1] != 2:
        raise ValueError(f"exact hypervolume needs K=2, got K={P.shape[1]}")
    if np.any(P < 0) or np.any(P > r):
        raise ValueError(f"points must lie inside [0, {r}]^2")
    order = np.lexsort((P[:, 1], P[:, 0]))
    P = P[order]
    area = 0.0
    best_y = r
    prev_x = None
    for x, y in P:
        if y >= best_y:
            continue  # dominated
        if prev_x is not None:
            area += (x - prev_x) * (r - best_y)
        prev_x, best_y = x, y
    area += (r - prev_x) * (r - best_y)
    return float(area)


def positive_sphere_constant(K: int) -> float:
    """c_K = pi^{K/2} / (2^K Gamma(K/2 + 1)), the volume of the positive orthant of the unit ball."""
    return math.pi ** (K / 2) / (2 ** K * math.gamma(K / 2 + 1))


def hypervolume_mc(points, spec: HypervolumeSpec) -> float:
    """Monte-Carlo hypervolume from random directions on the positive unit sphere.

    HV_r(S) = c_K E_u[ max_s min_k ((r - s_k) / u_k)^K ].
    """
    P = _as_matrix(points)
    if P.shape[0] == 0:
        return 0.0
    r = spec.reference
    if np.any(P < 0) or np.any(P > r):
        raise ValueError(f"points must lie inside [0, {r}]^K")
    K = P.shape[1]
    gap = r - P  # (m, K)
    gen = rng.stream(spec.seed, "hv-directions")
    total = 0.0
    remaining = spec.samples
    while remaining:
        m = min(MC_CHUNK, remaining)
        u = np.abs(rng.normal(gen, (m, K)))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        with np.errstate(divide="ignore"):
            ratios = gap[None, :, :] / u[:, None, :]  # (m, points, K)
        t = ratios.min(axis=2).max(axis=1)
        total += float(np.sum(t ** K))
        remaining -= m
    return positive_sphere_constant(K) * total / spec.samples


def hypervolume(points, r: float, samples: int = 1_000_000, seed: int = 0) -> float:
    """Exact for K=2, Monte-Carlo otherwise; points outside [0, r]^K are dropped."""
    P = _as_matrix(points)
    if P.shape[0]:
        P = P[np.all(P <= r, axis=1)]
    if P.shape[0] == 0:
        return 0.0
    if P.shape[1] == 2:
        return hypervolume_exact_2d(P, r)
    return hypervolume_mc(P, HypervolumeSpec(r, samples, seed))


def front(objs: ObjectiveTuple, thetas: Sequence) -> np.ndarray:
    return np.array([objective_values(t, objs) for t in thetas])


def front_epsilons(objs: ObjectiveTuple, lambda_grid: Sequence[SimplexWeights], theta_hats: Sequence):
    """Per-grid-point epsilons G_k ||d|| + nu_k/2 ||d||^2 (shape: grid x K) and the constants used."""
    const = regularity_of(objs, lambda_grid)
    eps = np.zeros((len(lambda_grid), objs.K))
    for i, (lam, th) in enumerate(zip(lambda_grid, theta_hats)):
        dist = estimation_error(th, mixture_quadratic_minimizer(objs, lam))
        eps[i] = const.grad_sup * dist + 0.5 * const.smoothness * dist ** 2
    return eps, const


def hypervolume_front_bound(objs: ObjectiveTuple, lambda_grid: Sequence[SimplexWeights], theta_hats: Sequence,
                             r: float, samples: int = 1_000_000, seed: int = 0):
    """(HV of estimated front, (1 - 2 eps_max / r)_+^K HV of true front, lhs >= rhs).

    eps_max is maximized over the supplied grid only.  Estimated points that
    leave [0, r]^K dominate nothing inside the box and are dropped.
    """
    if len(lambda_grid) != len(theta_hats):
        raise ValueError("need one estimate per grid point")
    thetas_star = [mixture_quadratic_minimizer(objs, lam) for lam in lambda_grid]
    true_front = front(objs, thetas_star)
    if r < 2.0 * np.abs(true_front).max():
        raise ValueError(f"reference r={r} is below twice the largest front value")
    eps, _ = front_epsilons(objs, lambda_grid, theta_hats)
    eps_max = float(eps.max())
    K = objs.K
    lhs = hypervolume(front(objs, theta_hats), r, samples, seed)
    rhs = max(0.0, 1.0 - 2.0 * eps_max / r) ** K * hypervolume(true_front, r, samples, seed)
    return lhs, rhs, bool(lhs >= rhs - 1e-12)


def error_rate(scores, labels, threshold: float = 0.5) -> float:
    """Fraction of rows where (score >= threshold) disagrees with the 0/1 label."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.size == 0:
        raise ValueError("error_rate needs at least one row")
    if s.shape != y.shape:
        raise DimensionMismatch("scores and labels differ in length")
    return float(np.mean((s >= threshold) != (y.astype(float) >= 0.5)))
