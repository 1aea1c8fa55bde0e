"""Whole-Pareto-set approximators: simplex-grid ensembles and hypernetworks.

The hypernetwork is the fixed K -> 128 -> ReLU -> d network, trained with a
hand-written backward pass and Adam.  Both training losses are sums of
quadratics in the network output h,

    sum_k lam_k (h^T A_k h - 2 c_k^T h + e_k)  [+ alpha ||h||_1],

so one training loop serves the two-stage loss (A_k = Sigma_hat_k,
c_k = Sigma_hat_k beta_hat_k) and the empirical loss of direct
regularization (A_k = X_k^T X_k / n_k, c_k = X_k^T y_k / n_k).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import rng
from .estimators import ObjectiveDataset, ParameterEstimate
from .model_core import DimensionMismatch, SimplexWeights, simplex_grid_2d

HIDDEN = 128
PARAM_NAMES = ("w1", "b1", "w2", "b2")


class TrainingDiverged(FloatingPointError):
    def __init__(self, step: int, loss: float):
        self.step = step
        self.loss = loss
        super().__init__(f"non-finite training loss {loss!r} at step {step}")


class EnsembleError(RuntimeError):
    def __init__(self, lam, cause):
        self.lam = lam
        super().__init__(f"estimator failed at lambda={list(lam)}: {cause}")


@dataclass(frozen=True)
class SimplexGrid:
    points: tuple

    def __post_init__(self):
        pts = tuple(p if isinstance(p, SimplexWeights) else SimplexWeights(p) for p in self.points)
        if not pts:
            raise ValueError("simplex grid must be non-empty")
        object.__setattr__(self, "points", pts)

    @classmethod
    def default(cls, size: int = 10) -> "SimplexGrid":
        return cls(tuple(simplex_grid_2d(size)))

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


def ensemble_fit(estimator: Callable[[SimplexWeights], np.ndarray], grid: SimplexGrid) -> dict:
    """Evaluate ``estimator`` at every grid point; keys are the weight tuples."""
    out = {}
    for lam in grid:
        try:
            out[lam.key()] = np.asarray(estimator(lam), dtype=float)
        except Exception as exc:  # re-raised with the offending lambda attached
            raise EnsembleError(lam.weights, exc) from exc
    return out


@dataclass
class Hypernetwork:
    w1: np.ndarray  # (H, K)
    b1: np.ndarray  # (H,)
    w2: np.ndarray  # (d, H)
    b2: np.ndarray  # (d,)

    def __post_init__(self):
        H, K = self.w1.shape
        d = self.b2.shape[0]
        if self.b1.shape != (H,) or self.w2.shape != (d, H):
            raise DimensionMismatch("inconsistent hypernetwork shapes")

    @property
    def K(self) -> int:
        return self.w1.shape[1]

    @property
    def dim(self) -> int:
        return self.b2.shape[0]

    @property
    def hidden(self) -> int:
        return self.w1.shape[0]

    def params(self) -> dict:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self) -> "Hypernetwork":
        return Hypernetwork(*(getattr(self, n).copy() for n in PARAM_NAMES))

    @classmethod
    def init(cls, K: int, d: int, seed: int, hidden: int = HIDDEN) -> "Hypernetwork":
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias."""
        gen = rng.stream(seed, "hypernet-init")
        a1 = 1.0 / math.sqrt(K)
        a2 = 1.0 / math.sqrt(hidden)
        w1 = rng.uniform(gen, (hidden, K)) * 2 * a1 - a1
        b1 = rng.uniform(gen, hidden) * 2 * a1 - a1
        w2 = rng.uniform(gen, (d, hidden)) * 2 * a2 - a2
        b2 = rng.uniform(gen, d) * 2 * a2 - a2
        return cls(w1, b1, w2, b2)

    def __call__(self, lam) -> np.ndarray:
        return hypernet_forward(self, lam)


@dataclass(frozen=True)
class TrainSettings:
    steps: int = 2000
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    concentration: float | None = None  # None -> 1/K
    hidden: int = HIDDEN

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if not (self.learning_rate > 0 and self.adam_eps > 0):
            raise ValueError("learning_rate and adam_eps must be positive")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")


def _lam_vector(lam, K: int) -> np.ndarray:
    w = lam.weights if isinstance(lam, SimplexWeights) else np.asarray(lam, dtype=float)
    if w.shape != (K,):
        raise DimensionMismatch(f"network expects K={K}, got {w.shape}")
    return w


def hypernet_forward(net: Hypernetwork, lam) -> np.ndarray:
    """w2 relu(w1 lam + b1) + b2."""
    w = _lam_vector(lam, net.K)
    return net.w2 @ np.maximum(net.w1 @ w + net.b1, 0.0) + net.b2


def _forward_cache(net: Hypernetwork, w: np.ndarray):
    z = net.w1 @ w + net.b1
    a = np.maximum(z, 0.0)
    return z, a, net.w2 @ a + net.b2


def _backward(net: Hypernetwork, w, z, a, grad_out) -> dict:
    dz = (net.w2.T @ grad_out) * (z > 0)
    return {
        "w1": np.outer(dz, w),
        "b1": dz,
        "w2": np.outer(grad_out, a),
        "b2": grad_out,
    }


def dirichlet_sample(K: int, gen: np.random.Generator, concentration: float | None = None) -> SimplexWeights:
    """Normalized Gamma(concentration, 1) draws; concentration defaults to 1/K."""
    if K < 2:
        raise ValueError("Dirichlet sampling needs K >= 2")
    conc = 1.0 / K if concentration is None else concentration
    while True:
        g = gen.gamma(conc, 1.0, size=K)
        if g.sum() > 0:
            return SimplexWeights.normalized(g)


# -- Adam ---------------------------------------------------------------------

@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0

    @classmethod
    def zeros_like(cls, params: dict) -> "AdamState":
        return cls({k: np.zeros_like(p) for k, p in params.items()},
                   {k: np.zeros_like(p) for k, p in params.items()}, 0)


def adam_step(params: dict, grads: dict, state: AdamState, settings: TrainSettings) -> AdamState:
    """One bias-corrected Adam update, applied to ``params`` in place."""
    state.t += 1
    b1, b2 = settings.adam_beta1, settings.adam_beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise DimensionMismatch(f"gradient for {name} has shape {g.shape}, parameter {p.shape}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= settings.learning_rate * (m / c1) / (np.sqrt(v / c2) + settings.adam_eps)
    return state


# -- quadratic training losses -------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuadraticLoss:
    """sum_k lam_k (h^T A_k h - 2 c_k^T h + e_k) + alpha ||h||_1."""

    quads: np.ndarray  # (K, d, d)
    linears: np.ndarray  # (K, d)
    consts: np.ndarray  # (K,)
    alpha: float = 0.0

    @property
    def K(self) -> int:
        return self.quads.shape[0]

    @property
    def dim(self) -> int:
        return self.quads.shape[1]

    def value_and_grad(self, lam_w: np.ndarray, h: np.ndarray):
        Ah = np.einsum("kij,j->ki", self.quads, h)
        per = np.einsum("ki,i->k", Ah, h) - 2.0 * self.linears @ h + self.consts
        value = float(lam_w @ per) + self.alpha * float(np.abs(h).sum())
        grad = 2.0 * (lam_w @ Ah - lam_w @ self.linears) + self.alpha * np.sign(h)
        return value, grad

    def value(self, lam_w, h) -> float:
        return self.value_and_grad(lam_w, h)[0]

    def minimizer(self, lam_w) -> np.ndarray:
        """Closed-form minimizer for alpha = 0."""
        M = np.einsum("k,kij->ij", lam_w, self.quads)
        return np.linalg.solve(M, lam_w @ self.linears)


def two_stage_loss(estimates: Sequence[ParameterEstimate], noise_offsets=None) -> QuadraticLoss:
    quads = np.stack([e.cov_hat for e in estimates])
    linears = np.stack([e.cov_hat @ e.beta_hat for e in estimates])
    consts = np.array([e.beta_hat @ e.cov_hat @ e.beta_hat for e in estimates])
    if noise_offsets is not None:
        consts = consts + np.asarray(noise_offsets, dtype=float)
    return QuadraticLoss(quads, linears, consts)


def direct_loss(datasets: Sequence[ObjectiveDataset], alpha: float) -> QuadraticLoss:
    quads = np.stack([D.labeled_x.T @ D.labeled_x / D.n for D in datasets])
    linears = np.stack([D.labeled_x.T @ D.labeled_y / D.n for D in datasets])
    consts = np.array([D.labeled_y @ D.labeled_y / D.n for D in datasets])
    return QuadraticLoss(quads, linears, consts, float(alpha))


def loss_grads(net: Hypernetwork, loss: QuadraticLoss, lam) -> tuple[float, dict]:
    """Training loss at lam and its gradient with respect to every network weight."""
    w = _lam_vector(lam, net.K)
    z, a, h = _forward_cache(net, w)
    value, g_out = loss.value_and_grad(w, h)
    return value, _backward(net, w, z, a, g_out)


def train_hypernet(loss: QuadraticLoss, settings: TrainSettings, net: Hypernetwork | None = None,
                   trace: list | None = None) -> Hypernetwork:
    """Sample lam ~ Dir(1/K), take one Adam step on the loss at h(lam); repeat ``steps`` times."""
    K = loss.K
    net = (net or Hypernetwork.init(K, loss.dim, settings.seed, settings.hidden)).copy()
    if settings.steps == 0:
        return net
    gen = rng.stream(settings.seed, "hypernet-lambda")
    params = net.params()
    state = AdamState.zeros_like(params)
    for step in range(1, settings.steps + 1):
        lam = dirichlet_sample(K, gen, settings.concentration)
        value, grads = loss_grads(net, loss, lam)
        if not math.isfinite(value):
            raise TrainingDiverged(step, value)
        if trace is not None:
            trace.append((lam.weights.copy(), value))
        adam_step(params, grads, state, settings)
    return net


def train_hypernet_two_stage(estimates: Sequence[ParameterEstimate], settings: TrainSettings,
                             net: Hypernetwork | None = None, trace: list | None = None) -> Hypernetwork:
    return train_hypernet(two_stage_loss(estimates), settings, net, trace)


def train_hypernet_direct(datasets: Sequence[ObjectiveDataset], alpha: float, settings: TrainSettings,
                          net: Hypernetwork | None = None, trace: list | None = None) -> Hypernetwork:
    if any(D.n < 1 for D in datasets):
        raise ValueError("every dataset needs at least one labeled row")
    return train_hypernet(direct_loss(datasets, alpha), settings, net, trace)


def mean_loss(net: Hypernetwork, loss: QuadraticLoss, lambdas: Sequence) -> float:
    return float(np.mean([loss.value(_lam_vector(l, net.K), hypernet_forward(net, l)) for l in lambdas]))


# -- serialization -------------------------------------------------------------

def save_hypernet(net: Hypernetwork, path) -> None:
    """Flat CSV: one row per entry, columns name,row,col,value (repr round-trips exactly)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "row", "col", "value"])
        for name in PARAM_NAMES:
            arr = np.atleast_2d(getattr(net, name).reshape(getattr(net, name).shape[0], -1))
            for (i, j), x in np.ndenumerate(arr):
                writer.writerow([name, i, j, repr(float(x))])


def load_hypernet(path) -> Hypernetwork:
    entries: dict = {name: {} for name in PARAM_NAMES}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            entries[row["name"]][(int(row["row"]), int(row["col"]))] = float(row["value"])
    arrays = {}
    for name, vals in entries.items():
        if not vals:
            raise ValueError(f"missing array {name!r} in {path}")
        rows = 1 + max(i for i, _ in vals)
        cols = 1 + max(j for _, j in vals)
        arr = np.zeros((rows, cols))
        for (i, j), x in vals.items():
            arr[i, j] = x
        arrays[name] = arr if name in ("w1", "w2") else arr[:, 0]
    return Hypernetwork(**arrays)
