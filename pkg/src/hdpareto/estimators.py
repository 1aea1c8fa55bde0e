"""Pareto-point estimators: plug-in, directly regularized and two-stage.

The two-stage estimator first estimates distributional parameters for each
objective (a LASSO coefficient vector and a sample covariance that also uses
unlabeled rows), then minimizes the linear scalarization of the quadratic
objectives built from those estimates in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng
from .model_core import (
    DimensionMismatch,
    ObjectiveTuple,
    QuadraticObjective,
    SimplexWeights,
    _check_lambda,
    zeta_local,
)
from .solvers import (
    PenalizedQuadratic,
    SolverSettings,
    coordinate_descent_l1,
    lasso,
    mixture_quadratic_minimizer,
)

# penalty constant of the multi-distribution LASSO stage
MULTIDIST_PENALTY_CONST = 136.0
ALPHA_GRID = np.logspace(-4, 1, 20)
HOLDOUT_FRACTION = 0.2
PILOT_RIDGE = 1e-2


@dataclass(frozen=True, eq=False)
class ObjectiveDataset:
    """Labeled pairs plus unlabeled covariates for one objective.

    ``group`` (entries in {-1, +1}) covers the labeled rows first, then the
    unlabeled rows.
    """

    labeled_x: np.ndarray
    labeled_y: np.ndarray
    unlabeled_x: np.ndarray | None = None
    group: np.ndarray | None = None

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.labeled_x, dtype=float))
        y = np.asarray(self.labeled_y, dtype=float).reshape(-1)
        if X.shape[0] != y.size:
            raise DimensionMismatch(f"{X.shape[0]} labeled rows but {y.size} responses")
        U = self.unlabeled_x
        if U is None or np.size(U) == 0:
            U = np.zeros((0, X.shape[1]))
        else:
            U = np.atleast_2d(np.asarray(U, dtype=float))
        if U.shape[1] != X.shape[1]:
            raise DimensionMismatch("labeled and unlabeled covariates differ in width")
        g = self.group
        if g is not None:
            g = np.asarray(g, dtype=float).reshape(-1)
            if g.size != X.shape[0] + U.shape[0]:
                raise DimensionMismatch(f"group has {g.size} entries, expected {X.shape[0] + U.shape[0]}")
            if not np.all(np.isin(g, (-1.0, 1.0))):
                raise ValueError("group entries must be -1 or +1")
            g.setflags(write=False)
        for a in (X, y, U):
            a.setflags(write=False)
        object.__setattr__(self, "labeled_x", X)
        object.__setattr__(self, "labeled_y", y)
        object.__setattr__(self, "unlabeled_x", U)
        object.__setattr__(self, "group", g)

    @property
    def n(self) -> int:
        return self.labeled_x.shape[0]

    @property
    def N(self) -> int:
        return self.unlabeled_x.shape[0]

    @property
    def dim(self) -> int:
        return self.labeled_x.shape[1]

    def all_x(self) -> np.ndarray:
        return np.vstack([self.labeled_x, self.unlabeled_x])


@dataclass(frozen=True, eq=False)
class ParameterEstimate:
    beta_hat: np.ndarray
    cov_hat: np.ndarray
    mu_hat: np.ndarray | None = None
    noise_var: float = 0.0

    def __post_init__(self):
        b = np.asarray(self.beta_hat, dtype=float)
        C = np.asarray(self.cov_hat, dtype=float)
        if C.shape != (b.size, b.size):
            raise DimensionMismatch(f"cov_hat {C.shape} does not match beta_hat {b.shape}")
        if np.abs(C - C.T).max(initial=0.0) > 1e-8 * max(1.0, np.abs(C).max(initial=0.0)):
            raise ValueError("cov_hat is not symmetric")
        if self.noise_var < 0:
            raise ValueError("noise_var must be non-negative")
        object.__setattr__(self, "beta_hat", b)
        object.__setattr__(self, "cov_hat", 0.5 * (C + C.T))

    def objective(self, offset: float | None = None) -> QuadraticObjective:
        c = self.noise_var if offset is None else offset
        return QuadraticObjective(self.cov_hat, self.beta_hat, c, validate=False)


# -- stage 1 -----------------------------------------------------------------

def sample_covariance(data: ObjectiveDataset) -> np.ndarray:
    """Uncentered second-moment matrix over labeled and unlabeled rows."""
    Z = data.all_x()
    if Z.shape[0] == 0:
        raise ValueError("sample_covariance needs at least one row")
    return Z.T @ Z / Z.shape[0]


def signed_mean(data: ObjectiveDataset) -> np.ndarray:
    """Average of group_i * x_i over all rows."""
    if data.group is None:
        raise ValueError("signed_mean needs a group attribute")
    Z = data.all_x()
    return data.group @ Z / Z.shape[0]


def pilot_noise_sd(data: ObjectiveDataset) -> float:
    """Residual standard deviation of a lightly ridge-penalized pilot fit."""
    X, y = data.labeled_x, data.labeled_y
    n, d = X.shape
    beta = np.linalg.solve(X.T @ X / n + PILOT_RIDGE * np.eye(d), X.T @ y / n)
    return float(np.sqrt(np.mean((y - X @ beta) ** 2)))


def multidist_penalty(n: int, d: int, B: float, sigma: float, const: float = MULTIDIST_PENALTY_CONST) -> float:
    return const * B * sigma * math.sqrt(math.log(d) / n) if d > 1 else 0.0


def stage1_multidist(data: ObjectiveDataset, B: float | None = 1.0, sigma: float | None = None,
                     settings: SolverSettings | None = None,
                     penalty_const: float = MULTIDIST_PENALTY_CONST) -> ParameterEstimate:
    """LASSO coefficients (penalty const * B * sigma * sqrt(log d / n)) plus sample covariance.

    ``sigma=None`` estimates the noise level from a ridge pilot fit and
    ``B=None`` falls back to 1.
    """
    if data.n < 1:
        raise ValueError("stage 1 needs at least one labeled row")
    if sigma is None:
        sigma = pilot_noise_sd(data)
    if B is None:
        B = 1.0
    alpha = multidist_penalty(data.n, data.dim, B, sigma, penalty_const)
    beta_hat = lasso(data.labeled_x, data.labeled_y, alpha, settings).theta
    return ParameterEstimate(beta_hat, sample_covariance(data), noise_var=sigma ** 2)


def stage1_fixed_design(X, y, gamma: float, sigma: float, settings: SolverSettings | None = None) -> ParameterEstimate:
    """LASSO at 6 gamma sigma sqrt(2 log d / n) with the known design Gram matrix."""
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    alpha = 6.0 * gamma * sigma * math.sqrt(2.0 * math.log(d) / n)
    beta_hat = lasso(X, y, alpha, settings).theta
    return ParameterEstimate(beta_hat, X.T @ X / n, noise_var=sigma ** 2)


def stage1_fairness(data: ObjectiveDataset, sigma: float | None = None, settings: SolverSettings | None = None,
                    penalty_const: float = MULTIDIST_PENALTY_CONST) -> ParameterEstimate:
    """LASSO at const * sigma * sqrt(log d / n) and the signed mean over all rows.

    cov_hat is I + mu_hat mu_hat^T, the second moment implied by the group model.
    """
    if sigma is None:
        sigma = pilot_noise_sd(data)
    alpha = multidist_penalty(data.n, data.dim, 1.0, sigma, penalty_const)
    beta_hat = lasso(data.labeled_x, data.labeled_y, alpha, settings).theta
    mu_hat = signed_mean(data)
    cov = np.eye(data.dim) + np.outer(mu_hat, mu_hat)
    return ParameterEstimate(beta_hat, cov, mu_hat=mu_hat, noise_var=sigma ** 2)


# -- stage 2 -----------------------------------------------------------------

def estimate_objectives(estimates: Sequence[ParameterEstimate], noise_offsets=None) -> ObjectiveTuple:
    K = len(estimates)
    offsets = np.zeros(K) if noise_offsets is None else np.asarray(noise_offsets, dtype=float)
    if offsets.shape != (K,):
        raise DimensionMismatch(f"need {K} noise offsets, got {offsets.shape}")
    return ObjectiveTuple(tuple(est.objective(c) for est, c in zip(estimates, offsets)))


def two_stage(estimates: Sequence[ParameterEstimate], lam, noise_offsets=None) -> np.ndarray:
    """Closed-form minimizer of sum_k lam_k (theta - beta_hat_k)^T cov_hat_k (theta - beta_hat_k)."""
    return mixture_quadratic_minimizer(estimate_objectives(estimates, noise_offsets), lam)


def two_stage_fairness(beta_hat, mu_hat, lam, risk_scale: float = 1.0) -> np.ndarray:
    """Minimizer of lam_risk * s * (theta - beta)^T (I + mu mu^T) (theta - beta) + lam_fair <theta, mu>^2.

    ``lam = (lam_risk, lam_fair)``; ``risk_scale`` is s (set it to 1/n to
    keep the 1/n factor on the risk term).  Solved in O(d) with
    Sherman-Morrison since the system matrix is a_r I + (a_r + a_f) mu mu^T.
    """
    lam = _check_lambda(lam, 2)
    beta = np.asarray(beta_hat, dtype=float)
    mu = np.asarray(mu_hat, dtype=float)
    if beta.shape != mu.shape:
        raise DimensionMismatch("beta_hat and mu_hat must have the same shape")
    a_r = lam[0] * risk_scale
    a_f = lam[1]
    if a_r <= 0:
        raise ValueError("the risk weight must be positive: the fairness score alone is not strongly convex")
    c = a_r + a_f
    rhs = a_r * (beta + mu * (mu @ beta))
    mm = mu @ mu
    return (rhs - mu * (c * (mu @ rhs) / (a_r + c * mm))) / a_r


def perturbation_bound(true_params: Sequence[ParameterEstimate], est_params: Sequence[ParameterEstimate],
                       lam) -> tuple[float, float]:
    """Right-hand side of the two-stage stability bound and the actual error.

    bound = zeta(theta*) / sum_k lam_k mu_k * sum_k lam_k (||beta_hat - beta|| + ||Sigma_hat - Sigma||_2)

    with mu_k = 2 lambda_min(Sigma_hat_k) and zeta taken at the population
    minimizer with B^2 the largest eigenvalue across both tuples.  Valid
    whenever every ||beta_k|| <= 2.
    """
    lam = _check_lambda(lam, len(true_params))
    true_objs = estimate_objectives(true_params)
    est_objs = estimate_objectives(est_params)
    theta_star = mixture_quadratic_minimizer(true_objs, lam)
    theta_hat = mixture_quadratic_minimizer(est_objs, lam)
    mu = np.array([2.0 * np.linalg.eigvalsh(p.cov_hat)[0] for p in est_params])
    B2 = max(float(np.linalg.eigvalsh(p.cov_hat)[-1]) for p in (*true_params, *est_params))
    param_err = np.array([
        np.linalg.norm(e.beta_hat - t.beta_hat) + np.linalg.norm(e.cov_hat - t.cov_hat, 2)
        for t, e in zip(true_params, est_params)
    ])
    bound = zeta_local(theta_star, B2) / float(lam.weights @ mu) * float(lam.weights @ param_err)
    return bound, float(np.linalg.norm(theta_hat - theta_star))


# -- direct regularization ---------------------------------------------------

def _weighted_gram(datasets: Sequence[ObjectiveDataset], lam: SimplexWeights, rows=None):
    d = datasets[0].dim
    A = np.zeros((d, d))
    v = np.zeros(d)
    for k, (w, data) in enumerate(zip(lam.weights, datasets)):
        if data.dim != d:
            raise DimensionMismatch("all datasets must share the covariate dimension")
        if w == 0.0:
            continue
        X, y = data.labeled_x, data.labeled_y
        if rows is not None:
            X, y = X[rows[k]], y[rows[k]]
        if X.shape[0] < 1:
            raise ValueError("every dataset needs at least one labeled row")
        A += w * (X.T @ X) / X.shape[0]
        v += w * (X.T @ y) / X.shape[0]
    return A, v


def holdout_split(datasets: Sequence[ObjectiveDataset], seed: int, fraction: float = HOLDOUT_FRACTION):
    """Per-dataset (train_rows, heldout_rows) from a seeded permutation."""
    out = []
    for k, data in enumerate(datasets):
        perm = rng.substream(seed, "holdout", k).permutation(data.n)
        n_hold = int(round(fraction * data.n))
        if data.n >= 2:
            n_hold = min(max(n_hold, 1), data.n - 1)
        else:
            n_hold = 0
        out.append((np.sort(perm[n_hold:]), np.sort(perm[:n_hold])))
    return out


def _best_on_path(A, v, grid, settings: SolverSettings, val_loss) -> tuple[float, np.ndarray]:
    """Warm-started path from the largest alpha down; the alpha with least validation loss and its fit."""
    best_alpha, best_loss = float(max(grid)), np.inf
    theta = np.zeros(A.shape[0])
    best_theta = theta
    for alpha in sorted(grid, reverse=True):
        theta = coordinate_descent_l1(PenalizedQuadratic(A, v, alpha), theta, settings).theta
        loss = val_loss(theta)
        if loss < best_loss:
            best_alpha, best_loss, best_theta = float(alpha), loss, theta
    return best_alpha, best_theta


def select_alpha(datasets: Sequence[ObjectiveDataset], lam, settings: SolverSettings | None = None,
                 grid=ALPHA_GRID) -> float:
    """Pick alpha on a held-out 20% of each dataset's labeled rows (scalarized validation MSE)."""
    return _select_on_holdout(datasets, lam, settings, grid)[0]


def _select_on_holdout(datasets, lam, settings, grid):
    settings = settings or SolverSettings()
    lam = _check_lambda(lam, len(datasets))
    split = holdout_split(datasets, settings.seed)
    A, v = _weighted_gram(datasets, lam, rows=[s[0] for s in split])

    def val_loss(theta):
        loss = 0.0
        for w, data, (_, hold) in zip(lam.weights, datasets, split):
            if w == 0.0 or hold.size == 0:
                continue
            r = data.labeled_x[hold] @ theta - data.labeled_y[hold]
            loss += w * float(r @ r) / hold.size
        return loss

    return _best_on_path(A, v, grid, settings, val_loss)


def stage1_holdout(datasets: Sequence[ObjectiveDataset], k: int, settings: SolverSettings | None = None,
                   grid=ALPHA_GRID) -> ParameterEstimate:
    """Stage 1 for objective k with the LASSO penalty chosen on held-out rows.

    Uses exactly the split and path of ``direct_regularized`` at lambda = e_k,
    so at that endpoint both estimators return the same coefficients.
    """
    lam = SimplexWeights.one_hot(len(datasets), k)
    beta_hat = direct_regularized(datasets, lam, None, settings, grid=grid)
    return ParameterEstimate(beta_hat, sample_covariance(datasets[k]))


def direct_regularized(datasets: Sequence[ObjectiveDataset], lam, alpha: float | None,
                       settings: SolverSettings | None = None, init=None, grid=ALPHA_GRID) -> np.ndarray:
    """argmin sum_k lam_k (1/n_k) ||X_k theta - y_k||^2 + alpha ||theta||_1.

    ``alpha=None`` selects alpha on held-out rows first (see ``select_alpha``)
    and, unless ``init`` is given, warm-starts from the held-out fit.
    """
    lam = _check_lambda(lam, len(datasets))
    if alpha is None:
        alpha, path_theta = _select_on_holdout(datasets, lam, settings, grid)
        init = path_theta if init is None else init
    A, v = _weighted_gram(datasets, lam)
    return coordinate_descent_l1(PenalizedQuadratic(A, v, alpha), init, settings).theta


def direct_regularized_path(datasets: Sequence[ObjectiveDataset], lam, alphas,
                            settings: SolverSettings | None = None) -> dict[float, np.ndarray]:
    """direct_regularized over several alphas, warm-started from large to small."""
    lam = _check_lambda(lam, len(datasets))
    A, v = _weighted_gram(datasets, lam)
    theta = np.zeros(A.shape[0])
    out = {}
    for alpha in sorted(alphas, reverse=True):
        theta = coordinate_descent_l1(PenalizedQuadratic(A, v, alpha), theta, settings).theta
        out[float(alpha)] = theta
    return out


def plug_in(datasets: Sequence[ObjectiveDataset], lam, settings: SolverSettings | None = None) -> np.ndarray:
    return direct_regularized(datasets, lam, 0.0, settings)


# -- fairness ----------------------------------------------------------------

def _fairness_system(data: ObjectiveDataset, mu_hat, lam: SimplexWeights, risk_scale: float, rows=None):
    X, y = data.labeled_x, data.labeled_y
    if rows is not None:
        X, y = X[rows], y[rows]
    a_r = lam[0] * risk_scale
    A = a_r * (X.T @ X) / X.shape[0] + lam[1] * np.outer(mu_hat, mu_hat)
    return A, a_r * (X.T @ y) / X.shape[0]


def direct_regularized_fairness(data: ObjectiveDataset, mu_hat, lam, alpha: float | None = None,
                                settings: SolverSettings | None = None, risk_scale: float = 1.0,
                                grid=ALPHA_GRID) -> np.ndarray:
    """argmin lam_risk * s * (1/n)||X theta - y||^2 + lam_fair <mu_hat, theta>^2 + alpha ||theta||_1.

    With ``alpha=None`` alpha is picked on the same held-out rows as
    ``select_alpha`` uses for a single dataset.
    """
    settings = settings or SolverSettings()
    lam = _check_lambda(lam, 2)
    mu_hat = np.asarray(mu_hat, dtype=float)
    if alpha is None:
        train, hold = holdout_split([data], settings.seed)[0]
        A, v = _fairness_system(data, mu_hat, lam, risk_scale, rows=train)

        def val_loss(theta):
            r = data.labeled_x[hold] @ theta - data.labeled_y[hold]
            risk = float(r @ r) / hold.size if hold.size else 0.0
            return lam[0] * risk_scale * risk + lam[1] * float(mu_hat @ theta) ** 2

        alpha, init = _best_on_path(A, v, grid, settings, val_loss)
    else:
        init = None
    A, v = _fairness_system(data, mu_hat, lam, risk_scale)
    return coordinate_descent_l1(PenalizedQuadratic(A, v, alpha), init, settings).theta
