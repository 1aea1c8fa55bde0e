"""Objectives, simplex weights and scalarizations.

Every objective handled by the package is a quadratic in normal form

    L(theta) = (theta - b)^T Q (theta - b) + c

which covers the squared-loss risk of a linear model (Q = E[xx^T], b = beta,
c = noise variance), the Gaussian demographic-parity score (Q = mu mu^T,
b = 0, c = 0) and fixed-design least squares (Q = X^T X / n).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

SUM_TOL = 1e-12
PSD_TOL = 1e-10


class DimensionMismatch(ValueError):
    pass


class NotStronglyConvex(ValueError):
    pass


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SimplexWeights:
    """A point of the probability simplex."""

    weights: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("simplex weights must be a non-empty 1-d vector")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError(f"simplex weights must be finite and non-negative: {w}")
        if abs(w.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"simplex weights must sum to 1 (got {w.sum()!r})")
        object.__setattr__(self, "weights", w)

    @classmethod
    def normalized(cls, raw) -> "SimplexWeights":
        """Rescale a non-negative vector onto the simplex."""
        raw = np.asarray(raw, dtype=float)
        total = raw.sum()
        if total <= 0:
            raise ValueError("cannot normalize a vector with non-positive sum")
        w = raw / total
        # push the rounding residue into the largest entry
        w[np.argmax(w)] += 1.0 - w.sum()
        return cls(w)

    @classmethod
    def one_hot(cls, K: int, k: int) -> "SimplexWeights":
        w = np.zeros(K)
        w[k] = 1.0
        return cls(w)

    @property
    def K(self) -> int:
        return self.weights.size

    def __len__(self):
        return self.weights.size

    def __getitem__(self, k):
        return self.weights[k]

    def key(self) -> tuple:
        return tuple(float(x) for x in self.weights)


def simplex_grid_2d(size: int = 10) -> list[SimplexWeights]:
    """``size`` equispaced weights (t, 1 - t) from e_2 to e_1, endpoints included."""
    if size < 1:
        raise ValueError("grid size must be positive")
    if size == 1:
        return [SimplexWeights([0.5, 0.5])]
    out = []
    for t in np.linspace(0.0, 1.0, size):
        out.append(SimplexWeights([t, 1.0 - t]))
    return out


@dataclass(frozen=True, eq=False)
class QuadraticObjective:
    """L(theta) = (theta - center)^T quad (theta - center) + offset."""

    quad: np.ndarray
    center: np.ndarray
    offset: float = 0.0
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        Q = np.array(self.quad, dtype=float)
        b = np.array(self.center, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise DimensionMismatch(f"quad must be square, got shape {Q.shape}")
        if b.shape != (Q.shape[0],):
            raise DimensionMismatch(f"center has shape {b.shape}, quad is {Q.shape}")
        # roundoff asymmetry is averaged away; anything larger is a caller bug
        if self.validate and np.abs(Q - Q.T).max(initial=0.0) > 1e-8 * max(1.0, np.abs(Q).max(initial=0.0)):
            raise ValueError("quad is not symmetric")
        Q = 0.5 * (Q + Q.T)
        Q.setflags(write=False)
        b.setflags(write=False)
        if not np.isfinite(self.offset) or self.offset < 0:
            raise ValueError(f"offset must be a non-negative real, got {self.offset}")
        object.__setattr__(self, "quad", Q)
        object.__setattr__(self, "center", b)
        object.__setattr__(self, "offset", float(self.offset))
        if self.validate and self.eigenvalues[0] < -PSD_TOL:
            raise ValueError(f"quad is not PSD (min eigenvalue {self.eigenvalues[0]:.3e})")

    @property
    def dim(self) -> int:
        return self.center.size

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.quad)

    @property
    def strong_convexity(self) -> float:
        return max(0.0, 2.0 * float(self.eigenvalues[0]))

    @property
    def smoothness(self) -> float:
        return 2.0 * float(self.eigenvalues[-1])


@dataclass(frozen=True)
class ObjectiveTuple:
    objectives: tuple
    dim: int = 0

    def __post_init__(self):
        objs = tuple(self.objectives)
        if not objs:
            raise ValueError("need at least one objective")
        d = objs[0].dim
        for obj in objs:
            if obj.dim != d:
                raise DimensionMismatch("all objectives must share the same dimension")
        if self.dim not in (0, d):
            raise DimensionMismatch(f"dim={self.dim} but objectives have dimension {d}")
        object.__setattr__(self, "objectives", objs)
        object.__setattr__(self, "dim", d)

    @property
    def K(self) -> int:
        return len(self.objectives)

    def __iter__(self):
        return iter(self.objectives)

    def __getitem__(self, k):
        return self.objectives[k]

    def __len__(self):
        return len(self.objectives)


class ScalarizationKind(enum.Enum):
    LINEAR = "linear"
    CHEBYSHEV = "chebyshev"


@dataclass(frozen=True)
class RegularityConstants:
    strong_convexity: np.ndarray
    smoothness: np.ndarray
    grad_sup: np.ndarray
    lipschitz_param: float


def _check_theta(theta, obj: QuadraticObjective) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (obj.dim,):
        raise DimensionMismatch(f"theta has shape {theta.shape}, objective has dim {obj.dim}")
    return theta


def eval_objective(theta, obj: QuadraticObjective) -> float:
    r = _check_theta(theta, obj) - obj.center
    return float(r @ obj.quad @ r) + obj.offset


def grad_objective(theta, obj: QuadraticObjective) -> np.ndarray:
    r = _check_theta(theta, obj) - obj.center
    return 2.0 * (obj.quad @ r)


def objective_values(theta, objs: ObjectiveTuple) -> np.ndarray:
    """The vector (L_1(theta), ..., L_K(theta))."""
    return np.array([eval_objective(theta, obj) for obj in objs])


def _check_lambda(lam, K: int) -> SimplexWeights:
    if not isinstance(lam, SimplexWeights):
        lam = SimplexWeights(lam)
    if lam.K != K:
        raise DimensionMismatch(f"weights have K={lam.K}, objectives have K={K}")
    return lam


def scalarize(values, lam: SimplexWeights, kind: ScalarizationKind = ScalarizationKind.LINEAR) -> float:
    """Apply the scalarization to a vector of objective values."""
    values = np.asarray(values, dtype=float)
    lam = _check_lambda(lam, values.size)
    if kind is ScalarizationKind.LINEAR:
        return float(lam.weights @ values)
    if kind is ScalarizationKind.CHEBYSHEV:
        return float(np.max(lam.weights * values))
    raise ValueError(f"unknown scalarization {kind!r}")


def eval_scalarized(theta, objs: ObjectiveTuple, lam, kind: ScalarizationKind = ScalarizationKind.LINEAR) -> float:
    lam = _check_lambda(lam, objs.K)
    return scalarize(objective_values(theta, objs), lam, kind)


def fairness_objective(mu) -> QuadraticObjective:
    """Demographic-parity score <mu, theta>^2 under the Gaussian group model."""
    mu = np.asarray(mu, dtype=float)
    return QuadraticObjective(np.outer(mu, mu), np.zeros_like(mu), 0.0, validate=False)


def fairness_risk_objective(beta, mu, sigma2: float) -> QuadraticObjective:
    """Squared-loss risk when x | a ~ N(a mu, I), so E[xx^T] = I + mu mu^T."""
    beta = np.asarray(beta, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if beta.shape != mu.shape:
        raise DimensionMismatch("beta and mu must have the same shape")
    Q = np.eye(mu.size) + np.outer(mu, mu)
    return QuadraticObjective(Q, beta, sigma2, validate=False)


def zeta_local(theta, B2: float) -> float:
    """Local Lipschitz constant 2 max(||theta|| + 2, 2 B^2) of the gradient in (beta, Sigma)."""
    return 2.0 * max(float(np.linalg.norm(theta)) + 2.0, 2.0 * B2)


def regularity_of(objs: ObjectiveTuple, lambda_grid: Sequence[SimplexWeights]) -> RegularityConstants:
    """Strong convexity, smoothness, gradient sup over the grid and zeta."""
    from .solvers import mixture_quadratic_minimizer

    mu = np.array([obj.strong_convexity for obj in objs])
    nu = np.array([obj.smoothness for obj in objs])
    if not np.any(mu > 0):
        raise NotStronglyConvex("no objective is strongly convex")
    B2 = max(float(obj.eigenvalues[-1]) for obj in objs)
    G = np.zeros(objs.K)
    zeta = 0.0
    for lam in lambda_grid:
        theta = mixture_quadratic_minimizer(objs, lam)
        for k, obj in enumerate(objs):
            G[k] = max(G[k], float(np.linalg.norm(grad_objective(theta, obj))))
        zeta = max(zeta, zeta_local(theta, B2))
    return RegularityConstants(mu, nu, G, zeta)
