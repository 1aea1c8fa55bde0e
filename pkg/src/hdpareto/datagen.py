"""Seeded synthetic instances, samplers and worst-case constructions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .estimators import ObjectiveDataset, ParameterEstimate
from .model_core import ObjectiveTuple, QuadraticObjective, SimplexWeights


@dataclass(frozen=True, eq=False)
class SyntheticInstance:
    """K sparse linear-regression tasks y = <x, beta_k> + noise, x ~ N(0, Sigma_k)."""

    betas: tuple
    covariances: tuple
    noise_sd: float
    dims: tuple  # (d, K, s)

    def __post_init__(self):
        if len(self.betas) != len(self.covariances):
            raise ValueError("need one covariance per ground truth")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be non-negative")
        object.__setattr__(self, "betas", tuple(np.asarray(b, dtype=float) for b in self.betas))
        object.__setattr__(self, "covariances", tuple(np.asarray(c, dtype=float) for c in self.covariances))

    @property
    def d(self) -> int:
        return self.dims[0]

    @property
    def K(self) -> int:
        return len(self.betas)

    def objectives(self, with_noise: bool = True) -> ObjectiveTuple:
        """Population risks (theta - beta_k)^T Sigma_k (theta - beta_k) + sigma^2."""
        c = self.noise_sd ** 2 if with_noise else 0.0
        return ObjectiveTuple(tuple(
            QuadraticObjective(S, b, c, validate=False) for S, b in zip(self.covariances, self.betas)
        ))

    def parameters(self) -> list[ParameterEstimate]:
        return [ParameterEstimate(b, S, noise_var=self.noise_sd ** 2) for b, S in zip(self.betas, self.covariances)]


def _sparse_vector(gen_support, gen_values, d: int, s: int) -> np.ndarray:
    support = gen_support.permutation(d)[:s]
    values = rng.normal(gen_values, s)
    while not np.any(values):  # probability zero, but keep the unit norm well defined
        values = rng.normal(gen_values, s)
    out = np.zeros(d)
    out[np.sort(support)] = values
    return out / np.linalg.norm(out)


def random_sparse_vector(d: int, s: int, seed: int) -> np.ndarray:
    """Unit-norm vector with s uniformly placed standard-normal entries."""
    if not 1 <= s <= d:
        raise ValueError(f"need 1 <= s <= d, got s={s}, d={d}")
    return _sparse_vector(rng.stream(seed, "support"), rng.stream(seed, "values"), d, s)


def haar_orthogonal(d: int, gen) -> np.ndarray:
    Z = rng.normal(gen, (d, d))
    Q, R = np.linalg.qr(Z)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def random_covariance(d: int, b2: float, B2: float, seed: int) -> np.ndarray:
    """U diag(e) U^T with U Haar-orthogonal and e uniform on [b2, B2]."""
    if not (0 < b2 <= B2) or not np.isfinite(B2):
        raise ValueError(f"need 0 < b2 <= B2, got b2={b2}, B2={B2}")
    if b2 == B2:
        return b2 * np.eye(d)
    U = haar_orthogonal(d, rng.stream(seed, "rotation"))
    e = b2 + (B2 - b2) * rng.uniform(rng.stream(seed, "spectrum"), d)
    S = (U * e) @ U.T
    return 0.5 * (S + S.T)


def spiked_covariance(d: int, rank: int, b2: float, B2: float, seed: int) -> np.ndarray:
    """b2 I + (B2 - b2) U U^T with U the first ``rank`` columns of a Haar-orthogonal matrix."""
    if not (0 < b2 <= B2) or not np.isfinite(B2):
        raise ValueError(f"need 0 < b2 <= B2, got b2={b2}, B2={B2}")
    if not 0 <= rank <= d:
        raise ValueError(f"need 0 <= rank <= d, got rank={rank}")
    U = haar_orthogonal(d, rng.stream(seed, "rotation"))[:, :rank]
    S = b2 * np.eye(d) + (B2 - b2) * (U @ U.T)
    return 0.5 * (S + S.T)


def make_instance(d: int, K: int, s: int, sigma: float, seed: int, b2: float = 0.5, B2: float = 2.0,
                  spike_rank: int | None = None) -> SyntheticInstance:
    """K unit-norm s-sparse truths and covariances with spectrum in [b2, B2].

    Eigenvalues are uniform on [b2, B2] unless ``spike_rank`` is given, in
    which case ``spike_rank`` of them equal B2 and the rest b2.
    """
    betas = tuple(random_sparse_vector(d, s, rng.derive_seed(seed, "beta", k)) for k in range(K))
    if spike_rank is None:
        covs = tuple(random_covariance(d, b2, B2, rng.derive_seed(seed, "cov", k)) for k in range(K))
    else:
        covs = tuple(spiked_covariance(d, spike_rank, b2, B2, rng.derive_seed(seed, "cov", k)) for k in range(K))
    return SyntheticInstance(betas, covs, float(sigma), (d, K, s))


def psd_sqrt(S: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh(S)
    root = (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.T
    return 0.5 * (root + root.T)


def _gaussian_rows(S: np.ndarray, m: int, gen) -> np.ndarray:
    return rng.normal(gen, (m, S.shape[0])) @ psd_sqrt(S)


def sample_multidist(instance: SyntheticInstance, k: int, n: int, N: int, seed: int) -> ObjectiveDataset:
    """n labeled and N unlabeled rows from task k."""
    if n < 0 or N < 0 or n + N < 1:
        raise ValueError(f"empty sample request (n={n}, N={N})")
    S = instance.covariances[k]
    X = _gaussian_rows(S, n + N, rng.stream(seed, "x"))
    noise = instance.noise_sd * rng.normal(rng.stream(seed, "noise"), n)
    y = X[:n] @ instance.betas[k] + noise
    return ObjectiveDataset(X[:n], y, X[n:])


def sample_fairness(beta, mu, sigma: float, n: int, N: int, seed: int) -> ObjectiveDataset:
    """Rademacher groups a_i, x_i = a_i mu + N(0, I), y = <x, beta> + noise on the labeled rows."""
    if n < 0 or N < 0 or n + N < 1:
        raise ValueError(f"empty sample request (n={n}, N={N})")
    beta = np.asarray(beta, dtype=float)
    mu = np.asarray(mu, dtype=float)
    m = n + N
    group = rng.rademacher(rng.stream(seed, "group"), m)
    X = group[:, None] * mu[None, :] + rng.normal(rng.stream(seed, "x"), (m, mu.size))
    y = X[:n] @ beta + sigma * rng.normal(rng.stream(seed, "noise"), n)
    return ObjectiveDataset(X[:n], y, X[n:], group)


def fixed_design_from_cov(S: np.ndarray, n: int) -> np.ndarray:
    """X = sqrt(n) [S^{1/2}; 0] so that X^T X / n = S."""
    d = S.shape[0]
    if n < d:
        raise ValueError(f"fixed design needs n >= d (n={n}, d={d})")
    X = np.zeros((n, d))
    X[:d] = np.sqrt(n) * psd_sqrt(S)
    return X


def fixed_design_matrix(d: int, n: int, gamma: float, seed: int) -> np.ndarray:
    if n < d:
        raise ValueError(f"fixed design needs n >= d (n={n}, d={d})")
    if not gamma > 1:
        raise ValueError("gamma must exceed 1")
    return fixed_design_from_cov(random_covariance(d, 1.0 / gamma, gamma, seed), n)


def fixed_design_response(X, beta, sigma: float, seed: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return X @ np.asarray(beta, dtype=float) + sigma * rng.normal(rng.stream(seed, "noise"), X.shape[0])


def adversarial_instance(v, lam, gamma: float):
    """Covariances and 1-sparse truths whose lam-weighted minimizer is exactly v.

    Returns (Sigma_1, Sigma_2, beta_1, beta_2) with lam_1 Sigma_1 + lam_2 Sigma_2 = I
    and eigenvalues of both covariances in [1/gamma, gamma].  The truths sit on
    the first coordinate where v is nonzero.
    """
    v = np.asarray(v, dtype=float)
    lam = lam if isinstance(lam, SimplexWeights) else SimplexWeights(lam)
    if lam.K != 2 or np.any(lam.weights <= 0):
        raise ValueError("need K=2 weights, both strictly positive")
    if not gamma > 1:
        raise ValueError("gamma must exceed 1")
    if np.linalg.norm(v) > 1.0 + 1e-12:
        raise ValueError("v must lie in the unit ball")
    l1, l2 = lam.weights
    d = v.size
    I = np.eye(d)
    nz = np.flatnonzero(v)
    if nz.size == 0:
        e1 = I[0]
        return I.copy(), I.copy(), e1.copy(), -(l1 / l2) * e1
    p = nz[0]
    c = (gamma - 1.0) / gamma
    vv = np.outer(v, v)
    S1 = l2 * c * vv + I
    S2 = -l1 * c * vv + I
    beta1 = np.zeros(d)
    beta2 = np.zeros(d)
    beta1[p] = 1.0 / (c * v[p] * l1)
    beta2[p] = -1.0 / (c * v[p] * l2)
    return S1, S2, beta1, beta2


def perturbation_matrix(v, beta) -> np.ndarray:
    """A(v) = v beta^T + beta v^T - <v, beta> beta beta^T, so that A(v) beta = v."""
    v = np.asarray(v, dtype=float)
    beta = np.asarray(beta, dtype=float)
    return np.outer(v, beta) + np.outer(beta, v) - (v @ beta) * np.outer(beta, beta)


def necessity_instance(v, beta):
    """(I + A(v), I - A(v)); with truths (beta, -beta) and equal weights the minimizer is v."""
    v = np.asarray(v, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if abs(np.linalg.norm(beta) - 1.0) > 1e-10:
        raise ValueError("beta must be a unit vector")
    if np.linalg.norm(v) > 0.25:
        raise ValueError("v must satisfy ||v|| <= 1/4")
    if v.shape != beta.shape:
        raise ValueError("v and beta must have the same shape")
    A = perturbation_matrix(v, beta)
    I = np.eye(v.size)
    return I + A, I - A
