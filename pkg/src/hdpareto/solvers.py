"""Deterministic solvers for quadratic and l1-penalized quadratic problems."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import _ext
from .model_core import DimensionMismatch, ObjectiveTuple, SimplexWeights, _check_lambda

log = logging.getLogger(__name__)

EIG_CLIP = 1e-12
SINGULAR_TOL = 1e-10


class SingularScalarization(np.linalg.LinAlgError):
    def __init__(self, lam, min_eig):
        self.lam = lam
        self.min_eig = min_eig
        super().__init__(
            f"weighted quadratic is singular at lambda={np.round(np.asarray(lam), 6).tolist()} "
            f"(min eigenvalue {min_eig:.3e})"
        )


@dataclass(frozen=True)
class SolverSettings:
    tol: float = 1e-10
    max_iter: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass(frozen=True, eq=False)
class PenalizedQuadratic:
    """theta^T quad theta - 2 <linear, theta> + penalty * ||theta||_1."""

    quad: np.ndarray
    linear: np.ndarray
    penalty: float = 0.0

    def __post_init__(self):
        A = np.array(self.quad, dtype=float)
        v = np.array(self.linear, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or v.shape != (A.shape[0],):
            raise DimensionMismatch(f"quad {A.shape} and linear {v.shape} do not match")
        if self.penalty < 0 or not np.isfinite(self.penalty):
            raise ValueError(f"penalty must be non-negative, got {self.penalty}")
        A = np.ascontiguousarray(0.5 * (A + A.T))
        A.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "quad", A)
        object.__setattr__(self, "linear", v)
        object.__setattr__(self, "penalty", float(self.penalty))

    @property
    def dim(self) -> int:
        return self.linear.size

    def objective(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        return float(theta @ self.quad @ theta - 2.0 * self.linear @ theta + self.penalty * np.abs(theta).sum())


@dataclass(frozen=True)
class SolveResult:
    theta: np.ndarray
    iterations: int
    converged: bool
    skipped: int = 0


def sym_solve(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve M x = rhs for symmetric M by eigendecomposition, clipping eigenvalues at 1e-12."""
    evals, evecs = np.linalg.eigh(M)
    evals = np.maximum(evals, EIG_CLIP)
    return evecs @ ((evecs.T @ rhs) / evals)


def mixture_quadratic_minimizer(objs: ObjectiveTuple, lam) -> np.ndarray:
    """argmin of sum_k lam_k (theta - b_k)^T Q_k (theta - b_k)."""
    lam = _check_lambda(lam, objs.K)
    M = np.zeros((objs.dim, objs.dim))
    rhs = np.zeros(objs.dim)
    for w, obj in zip(lam.weights, objs):
        if w == 0.0:
            continue
        M += w * obj.quad
        rhs += w * (obj.quad @ obj.center)
    evals, evecs = np.linalg.eigh(M)
    if evals[0] <= SINGULAR_TOL:
        raise SingularScalarization(lam.weights, float(evals[0]))
    active = np.flatnonzero(lam.weights)
    if active.size == 1:
        # a single strongly convex objective: its center, without solve round-off
        return objs[int(active[0])].center.copy()
    return evecs @ ((evecs.T @ rhs) / evals)


def _as_problem(problem: PenalizedQuadratic, init):
    if init is None:
        return np.zeros(problem.dim)
    init = np.asarray(init, dtype=float)
    if init.shape != (problem.dim,):
        raise DimensionMismatch(f"init has shape {init.shape}, problem dim is {problem.dim}")
    return init


def coordinate_descent_l1(problem: PenalizedQuadratic, init=None, settings: SolverSettings | None = None,
                          kernel=None) -> SolveResult:
    """Cyclic coordinate descent with closed-form soft-thresholding.

    Coordinates with a non-positive diagonal entry are left at their initial
    value; their count is returned in ``SolveResult.skipped``.  If ``max_iter``
    cycles pass without the largest coordinate change dropping to ``tol`` the
    last iterate is returned with ``converged=False``.
    """
    settings = settings or SolverSettings()
    theta0 = _as_problem(problem, init)
    kernel = kernel or _ext.cd_quadratic_l1
    theta, cycles, converged, skipped = kernel(
        problem.quad, np.ascontiguousarray(problem.linear), problem.penalty,
        np.ascontiguousarray(theta0), settings.tol, settings.max_iter,
    )
    if skipped:
        log.warning("coordinate descent skipped %d coordinates with non-positive curvature", skipped)
    if not converged:
        log.warning("coordinate descent hit max_iter=%d without converging", settings.max_iter)
    return SolveResult(np.asarray(theta), int(cycles), bool(converged), int(skipped))


def _power_iteration(A: np.ndarray, iters: int = 500, seed: int = 0) -> float:
    from .rng import normal, stream

    x = normal(stream(seed, "power-iteration"), A.shape[0])
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = A @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        x = y / norm
        if abs(norm - est) <= 1e-12 * norm:
            est = norm
            break
        est = norm
    # power iteration underestimates; pad so the step stays admissible
    return float(est) * (1.0 + 1e-6)


def proximal_gradient_l1(problem: PenalizedQuadratic, init=None, settings: SolverSettings | None = None) -> SolveResult:
    """ISTA with step 1 / (2 lambda_max(A)); an independent check on coordinate descent."""
    settings = settings or SolverSettings()
    theta = _as_problem(problem, init).copy()
    L = 2.0 * _power_iteration(problem.quad, seed=settings.seed)
    if L == 0.0:
        return SolveResult(theta, 0, True)
    step = 1.0 / L
    thresh = step * problem.penalty
    for it in range(1, settings.max_iter + 1):
        grad = 2.0 * (problem.quad @ theta) - 2.0 * problem.linear
        z = theta - step * grad
        new = np.sign(z) * np.maximum(np.abs(z) - thresh, 0.0)
        change = np.abs(new - theta).max()
        theta = new
        if change <= settings.tol:
            return SolveResult(theta, it, True)
    return SolveResult(theta, settings.max_iter, False)


def kkt_violation_l1(problem: PenalizedQuadratic, theta) -> float:
    """Largest violation of the l1 optimality conditions; <= 0 at a minimizer."""
    theta = np.asarray(theta, dtype=float)
    g = 2.0 * (problem.quad @ theta) - 2.0 * problem.linear
    alpha = problem.penalty
    zero = theta == 0.0
    viol = np.where(zero, np.abs(g) - alpha, np.abs(g + alpha * np.sign(theta)))
    return float(viol.max(initial=-np.inf)) if viol.size else 0.0


def lasso(X, y, alpha: float, settings: SolverSettings | None = None, init=None) -> SolveResult:
    """(1/n) ||X beta - y||^2 + alpha ||beta||_1 via coordinate descent on the Gram matrix."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    if n < 1:
        raise ValueError("lasso needs at least one labeled row")
    if y.shape != (n,):
        raise DimensionMismatch(f"y has shape {y.shape}, X has {n} rows")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    problem = PenalizedQuadratic(X.T @ X / n, X.T @ y / n, alpha)
    return coordinate_descent_l1(problem, init, settings)
